#pragma once

// Table-based ANS (FSE-style) literal coder.
//
// Encoding runs over the input backwards; the emitted bit chunks are written
// in reverse so the decoder reads a plain MSB-first stream front to back,
// starting with the final encoder state.

#include "dpz/huffman.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dpz::fse {

inline constexpr unsigned kMinTableLog = 4;
inline constexpr unsigned kMaxTableLog = 12;
inline constexpr unsigned kDefaultTableLog = 11;
inline constexpr std::size_t kHeaderBytes = 1 + 256 * 12 / 8;

using huffman::Histogram;

struct NormalizedCounts {
    unsigned table_log = kDefaultTableLog;
    std::array<std::uint16_t, 256> norm{};

    bool operator==(const NormalizedCounts&) const = default;
};

/// Scale `hist` to sum 2^table_log. Every present symbol keeps weight >= 1.
/// Throws InvalidArgument("use RLE/raw path") for fewer than two symbols.
NormalizedCounts normalize_counts(const Histogram& hist, unsigned table_log = kDefaultTableLog);

class FseTables {
public:
    explicit FseTables(const NormalizedCounts& counts);

    unsigned table_log() const { return table_log_; }
    std::size_t table_size() const { return std::size_t{1} << table_log_; }
    const NormalizedCounts& counts() const { return counts_; }

    struct DecodeEntry {
        std::uint8_t symbol;
        std::uint8_t nb_bits;
        std::uint16_t new_state;
    };
    struct SymbolTransform {
        std::int32_t delta_find_state;
        std::uint32_t delta_nb_bits;
    };

    const std::vector<DecodeEntry>& decode_table() const { return decode_; }
    const std::vector<std::uint16_t>& state_table() const { return state_table_; }
    const SymbolTransform& transform(std::uint8_t s) const { return transform_[s]; }
    bool in_support(std::uint8_t s) const { return counts_.norm[s] != 0; }

    /// Encoder state (in [L, 2L)) used for the last input symbol, which is
    /// coded first without emitting bits.
    std::uint32_t initial_state(std::uint8_t s) const;

private:
    NormalizedCounts counts_;
    unsigned table_log_;
    std::vector<DecodeEntry> decode_;
    std::vector<std::uint16_t> state_table_;
    std::array<SymbolTransform, 256> transform_{};
};

FseTables build_tables(const NormalizedCounts& counts);

/// Spread step over the state ring.
inline constexpr std::size_t spread_step(std::size_t table_size) {
    return (table_size >> 1) + (table_size >> 3) + 3;
}

std::vector<std::uint8_t> encode(std::span<const std::uint8_t> bytes, const FseTables& tables);

/// Decode exactly `n` symbols. Throws CorruptStream on a bad final state,
/// truncation or trailing bits.
std::vector<std::uint8_t> decode(std::span<const std::uint8_t> bits, const FseTables& tables,
                                 std::size_t n);

/// table_log byte followed by 256 twelve-bit weights, MSB-first (385 bytes).
std::vector<std::uint8_t> serialize_counts(const NormalizedCounts& counts);
NormalizedCounts deserialize_counts(std::span<const std::uint8_t> bytes);

} // namespace dpz::fse
