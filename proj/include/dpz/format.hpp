#pragma once

// Chunk records and the .dpz stream container. See FORMAT.md for the
// byte-level layout.

#include "dpz/huffman.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace dpz::format {

inline constexpr std::size_t kPageSize = 4096;
inline constexpr unsigned kDefaultChunkLog = 12;
inline constexpr unsigned kMinChunkLog = 12;
inline constexpr unsigned kMaxChunkLog = 16;
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::uint8_t kCrcFlag = 0x10;
inline constexpr std::size_t kStreamHeaderBytes = 6;

enum class Mode : std::uint8_t { Raw = 0, LzHuf = 1, LzFse = 2, LzOnly = 3 };

/// Which encodings the framer may try. RAW is always the fallback.
enum class Policy { Auto, Raw, Huf, Fse, Lz };

std::string_view mode_name(Mode m);
std::optional<Policy> parse_policy(std::string_view name);
std::string_view policy_name(Policy p);

struct ChunkRecord {
    Mode mode = Mode::Raw;
    std::uint32_t orig_len = 0;
    std::vector<std::uint8_t> payload;

    std::size_t comp_len() const { return payload.size(); }
};

struct CompressOptions {
    Policy policy = Policy::Auto;
    unsigned chunk_log = kDefaultChunkLog;
    unsigned fse_table_log = 11;
};

/// Per-page detail for reporting and the cycle model.
struct PageStats {
    std::size_t orig_len = 0;
    Mode mode = Mode::Raw;
    std::size_t tokens = 0;
    std::size_t literals = 0;
    std::size_t literal_bytes_coded = 0;
    huffman::CanonizationTrace trace;
};

struct ChunkStats {
    std::vector<PageStats> pages;
};

inline std::size_t chunk_size(unsigned chunk_log) { return std::size_t{1} << chunk_log; }

/// 5 bytes for 4KB chunks; lengths widen to 3 bytes above that.
std::size_t record_header_size(unsigned chunk_log);

/// Compress 1..chunk_size bytes. Chunks above 4KB are coded as a run of
/// independent 4KB pages.
ChunkRecord compress_chunk(std::span<const std::uint8_t> data, const CompressOptions& opts = {},
                           ChunkStats* stats = nullptr);

std::vector<std::uint8_t> decompress_chunk(const ChunkRecord& rec,
                                           unsigned chunk_log = kDefaultChunkLog);

/// (record header + payload) / original size.
double chunk_ratio(const ChunkRecord& rec, unsigned chunk_log = kDefaultChunkLog);

/// Single-page codec used by both the chunk framer and the FTL.
std::vector<std::uint8_t> encode_page(std::span<const std::uint8_t> page, Mode mode,
                                      unsigned fse_table_log = 11, PageStats* stats = nullptr);
std::vector<std::uint8_t> decode_page(std::span<const std::uint8_t> payload, Mode mode,
                                      std::size_t orig_len);

/// Cheapest encoding of one page under `policy`, RAW when nothing is smaller.
std::pair<Mode, std::vector<std::uint8_t>> choose_page(std::span<const std::uint8_t> page,
                                                       Policy policy, unsigned fse_table_log,
                                                       PageStats* stats = nullptr);

// Record (de)serialization.
void write_record(std::vector<std::uint8_t>& out, const ChunkRecord& rec, unsigned chunk_log,
                  std::optional<std::uint32_t> crc = std::nullopt);
/// Parses one record at `pos`, advancing it. When `with_crc`, the trailing
/// checksum is returned through `crc`.
ChunkRecord read_record(std::span<const std::uint8_t> in, std::size_t& pos, unsigned chunk_log,
                        bool with_crc = false, std::uint32_t* crc = nullptr);

std::uint32_t crc32(std::span<const std::uint8_t> data);

struct StreamOptions {
    CompressOptions chunk;
    bool crc = false;
    unsigned jobs = 1;
};

struct StreamHeader {
    unsigned chunk_log = kDefaultChunkLog;
    bool crc = false;
};

std::vector<std::uint8_t> encode_stream_header(const StreamHeader& h);
StreamHeader decode_stream_header(std::span<const std::uint8_t> bytes);

/// Whole-buffer container codec.
std::vector<std::uint8_t> compress_buffer(std::span<const std::uint8_t> data,
                                          const StreamOptions& opts = {});
std::vector<std::uint8_t> decompress_buffer(std::span<const std::uint8_t> container);

/// Streaming container codec; records are emitted in input order whatever
/// `jobs` is.
void compress_stream(std::istream& in, std::ostream& out, const StreamOptions& opts = {});
void decompress_stream(std::istream& in, std::ostream& out);

} // namespace dpz::format
