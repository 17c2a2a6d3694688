#pragma once

// Canonical Huffman over the 256-symbol byte alphabet with a bounded-latency
// depth cap.
//
// The cap runs in three fixed-shape stages:
//   1. scan & clip   - one pass over all 256 slots, clip len > max to max,
//                      tally used leaves and the Kraft over-subscription k;
//   2. redistribute  - walk levels max-1 .. 1, demoting just enough leaves
//                      at each level to absorb k (ceil-shift, may overshoot);
//   3. hole repair   - fill the overshoot bit by bit from the deepest level
//                      upward, one level per iteration.
// Kraft sums are tracked in units of 2^-max_bits.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dpz::huffman {

inline constexpr unsigned kMaxBits = 11;
inline constexpr std::size_t kAlphabet = 256;
inline constexpr std::size_t kLengthHeaderBytes = kAlphabet / 2;

using Histogram = std::array<std::uint64_t, kAlphabet>;
/// 0 = symbol unused. Unbounded lengths from build_lengths may exceed 11.
using CodeLengths = std::array<std::uint8_t, kAlphabet>;

Histogram histogram(std::span<const std::uint8_t> bytes);

struct CanonizationTrace {
    unsigned n_leaves = 0;
    /// Over-subscription after clipping, in 2^-max_bits slots.
    std::int64_t deficit = 0;
    unsigned scan_cycles = 0;
    unsigned redistribute_cycles = 0;
    unsigned repair_cycles = 0;

    unsigned total() const { return scan_cycles + redistribute_cycles + repair_cycles; }
};

/// Cycle ceiling of the three stages for a 256-symbol alphabet.
inline constexpr unsigned kWorstCaseCycles = 256 + 10 + 8;

struct CappedLengths {
    CodeLengths lengths{};
    CanonizationTrace trace;
};

struct CanonicalCodeTable {
    CodeLengths lengths{};
    std::array<std::uint16_t, kAlphabet> codes{};
};

/// Optimal (unbounded) Huffman lengths via the two-queue construction.
/// A single used symbol gets length 1. Throws InvalidArgument("empty histogram").
CodeLengths build_lengths(const Histogram& hist);

/// Depth-cap `lengths` to `max_bits` while keeping the code complete. With
/// `weights`, demotions take the rarest leaf on a level and promotions the
/// most frequent; ties, and the default, go by ascending symbol.
CappedLengths cap_lengths(const CodeLengths& lengths, unsigned max_bits = kMaxBits,
                          const Histogram* weights = nullptr);

/// Σ 2^(max_bits - len) over used symbols.
std::uint64_t kraft_sum(const CodeLengths& lengths, unsigned max_bits = kMaxBits);

/// Throws InvalidArgument("invalid lengths") unless the code is complete at
/// depth <= 11 (or is the single-symbol length-1 code).
CanonicalCodeTable canonicalize(const CodeLengths& lengths);

/// Convenience pipeline: build, cap, canonicalize.
struct BuiltCode {
    CanonicalCodeTable table;
    CanonizationTrace trace;
};
BuiltCode build_code(const Histogram& hist);

std::vector<std::uint8_t> encode(std::span<const std::uint8_t> bytes,
                                 const CanonicalCodeTable& table);

/// Decode exactly `n` symbols. Throws CorruptStream on truncation, invalid
/// code words or trailing garbage.
std::vector<std::uint8_t> decode(std::span<const std::uint8_t> bits, const CodeLengths& lengths,
                                 std::size_t n);

/// 256 four-bit entries, even symbol in the high nibble.
std::array<std::uint8_t, kLengthHeaderBytes> serialize_lengths(const CodeLengths& lengths);
CodeLengths deserialize_lengths(std::span<const std::uint8_t> bytes);

/// Total coded bits Σ hist[s] * len[s].
std::uint64_t coded_bits(const Histogram& hist, const CodeLengths& lengths);

} // namespace dpz::huffman
