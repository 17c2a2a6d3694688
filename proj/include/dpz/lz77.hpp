#pragma once

// Block-local LZ77 modeled on a small-SRAM hardware encoder.
//
// Blocks are at most 4096 bytes and fully independent: no offset ever
// reaches before the start of the block being coded. The match table is a
// fixed 256 x 4 array of positions, each bucket a circular FIFO.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace dpz::lz77 {

inline constexpr std::size_t kMaxBlock = 4096;
inline constexpr std::size_t kMinMatch = 4;
inline constexpr std::size_t kMaxOffset = kMaxBlock - 1;
inline constexpr std::size_t kBuckets = 256;
inline constexpr std::size_t kSlots = 4;
inline constexpr std::size_t kRecentWindow = 256;

/// One sequence: `literal_len` literal bytes followed by a copy of
/// `match_len` bytes from `offset` bytes back. Only the final token of a
/// stream may carry match_len == 0.
struct Token {
    std::vector<std::uint8_t> literals;
    std::uint32_t match_len = 0;
    std::uint32_t offset = 0;

    std::size_t literal_len() const { return literals.size(); }
    bool operator==(const Token&) const = default;
};

using TokenStream = std::vector<Token>;

struct HashPair {
    std::uint8_t h0;
    std::uint8_t h1;
    bool operator==(const HashPair&) const = default;
};

/// Little-endian 4-byte load, the unit both hashes are computed over.
inline std::uint32_t load_word(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
           (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

/// h0: top byte of a 32-bit multiplicative (Fibonacci) hash.
/// h1: xor-fold of the four bytes.
HashPair hash_pair(std::uint32_t word);

/// Fixed-size candidate table: 256 buckets of 4 positions, FIFO eviction.
class MatchTable {
public:
    MatchTable();

    void insert(std::uint8_t bucket, std::uint16_t pos);

    /// Stored positions of `bucket`, oldest first.
    std::span<const std::uint16_t> candidates(std::uint8_t bucket,
                                              std::array<std::uint16_t, kSlots>& scratch) const;

    std::size_t occupancy(std::uint8_t bucket) const { return fill_[bucket]; }

private:
    std::array<std::array<std::uint16_t, kSlots>, kBuckets> slots_{};
    std::array<std::uint8_t, kBuckets> cursor_{};
    std::array<std::uint8_t, kBuckets> fill_{};
};

/// Encode one block (1..4096 bytes). Throws InvalidArgument on empty or
/// oversized input.
TokenStream encode(std::span<const std::uint8_t> block);

struct DecodeOptions {
    /// Serve offsets <= 256 from the modeled register window instead of
    /// the history buffer. Output is identical either way.
    bool recent_fast_path = true;
};

/// Expand tokens into exactly `expected_len` bytes. Throws CorruptStream on
/// out-of-range offsets or a length mismatch.
std::vector<std::uint8_t> decode(const TokenStream& tokens, std::size_t expected_len,
                                 DecodeOptions opts = {});

/// Sum of literal and match lengths.
std::size_t expanded_size(const TokenStream& tokens);

/// Checks the token invariants against a block of `block_len` bytes.
bool well_formed(const TokenStream& tokens, std::size_t block_len);

} // namespace dpz::lz77
