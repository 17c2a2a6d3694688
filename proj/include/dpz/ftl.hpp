#pragma once

// Log-structured flash translation layer with inline compression. Host pages
// are compressed into chunk records and packed back to back into flash pages;
// a record that overruns its page continues on the next one.

#include "dpz/error.hpp"
#include "dpz/format.hpp"

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dpz::ftl {

inline constexpr std::size_t kLogicalPage = 4096;

class NoSpace : public Error {
public:
    NoSpace() : Error("no space") {}
};

class GcFutile : public Error {
public:
    GcFutile() : Error("gc futile") {}
};

class UnmappedRead : public Error {
public:
    UnmappedRead() : Error("unmapped read") {}
};

struct NandGeometry {
    std::size_t page_size = 4096;
    std::size_t pages_per_block = 64;
    std::size_t block_count = 256;
    double op_fraction = 0.2;

    /// Throws InvalidArgument. page_size must be a power of two in 256..4096.
    void validate() const;
    std::size_t total_pages() const { return pages_per_block * block_count; }
    std::size_t block_bytes() const { return pages_per_block * page_size; }
    /// Pages left after over-provisioning.
    std::size_t user_pages() const;
};

struct Segment {
    std::uint32_t page_id = 0; // block * pages_per_block + page
    std::uint32_t offset = 0;
    std::uint32_t len = 0;
    bool continuation = false;

    bool operator==(const Segment&) const = default;
};

struct MappingEntry {
    std::vector<Segment> segments;
    format::Mode mode = format::Mode::Raw;
    std::uint32_t orig_len = kLogicalPage;
    /// Bytes on flash. RAW pages keep their header in this entry instead.
    std::uint32_t stored_len = 0;
    std::uint32_t block = 0;
};

struct Metrics {
    std::uint64_t host_writes = 0;
    std::uint64_t host_reads = 0;
    std::uint64_t host_bytes_written = 0;
    std::uint64_t host_bytes_read = 0;
    std::uint64_t nand_bytes_programmed = 0;
    std::uint64_t nand_bytes_read = 0;
    std::uint64_t pages_read = 0;
    std::uint64_t padding_bytes = 0;
    std::uint64_t gc_runs = 0;
    std::uint64_t gc_bytes_relocated = 0;
    std::uint64_t gc_pages_read = 0;
    std::uint64_t erases = 0;
    std::uint64_t live_bytes = 0;
    std::uint64_t mapped_lpns = 0;
    std::uint64_t exposed_lpns = 0;
    std::uint64_t user_capacity_bytes = 0;
    std::uint64_t raw_records = 0;
    std::uint64_t compressed_records = 0;
    /// Records currently mapped across more than two flash pages.
    std::uint64_t records_over_two_pages = 0;
    std::uint32_t max_pages_per_read = 0;
    std::vector<std::uint64_t> block_valid_bytes;

    /// Absent before the first host write / read.
    std::optional<double> waf() const;
    std::optional<double> raf() const;
    double space_utilization() const;
};

std::string metrics_json(const Metrics& m, int indent = 2);

struct SimOptions {
    NandGeometry geometry;
    double capacity_factor = 1.0;
    format::Policy policy = format::Policy::Auto;
    /// Reads of never-written pages return zeros instead of throwing.
    bool zero_unmapped = false;
    /// Free blocks held back for relocation.
    std::size_t gc_reserve_blocks = 2;
};

class Simulator {
public:
    explicit Simulator(const SimOptions& opts = {});

    /// factor in [1, 4]; returns the exposed page count.
    std::uint64_t configure_capacity(double factor);
    std::uint64_t exposed_lpns() const { return l2p_.size(); }
    const NandGeometry& geometry() const { return geo_; }

    void host_write(std::uint64_t lpn, std::span<const std::uint8_t> data);
    std::vector<std::uint8_t> host_read(std::uint64_t lpn);
    void trim(std::uint64_t lpn);

    /// Reclaims one block; returns the number of pages erased.
    std::size_t gc_step();

    Metrics metrics() const;
    const MappingEntry* entry(std::uint64_t lpn) const;

    /// Throws std::logic_error naming the first violated invariant.
    void check_invariants() const;
    /// Digest of mapping, block and counter state.
    std::uint64_t state_hash() const;

private:
    enum class BlockState : std::uint8_t { Free, Open, Closed };
    struct Block {
        BlockState state = BlockState::Free;
        std::uint64_t valid_bytes = 0;
        std::uint32_t erase_count = 0;
        std::vector<std::uint64_t> lpns; // records placed here, possibly stale
        std::vector<std::uint8_t> data;
    };

    std::size_t raw_pages() const { return kLogicalPage / geo_.page_size; }
    bool fits(std::size_t len, bool raw) const;
    void close_open();
    void open_block(std::size_t b);
    std::vector<Segment> place(std::span<const std::uint8_t> bytes, bool raw, bool for_gc);
    std::vector<Segment> append(std::span<const std::uint8_t> bytes, bool raw);
    std::vector<std::uint8_t> gather(const MappingEntry& e) const;
    void gc_once();
    std::optional<std::size_t> pick_victim() const;
    void relocate_and_erase(std::size_t victim);
    void drop(std::uint64_t lpn);

    NandGeometry geo_;
    SimOptions opts_;
    std::vector<std::optional<MappingEntry>> l2p_;
    std::vector<Block> blocks_;
    std::deque<std::size_t> free_;
    std::optional<std::size_t> open_;
    std::size_t open_page_ = 0;
    std::size_t open_ptr_ = 0;
    Metrics m_;
};

// Trace replay.

struct TraceOp {
    enum class Kind { Write, Read, Gc, Trim } kind = Kind::Read;
    std::uint64_t lpn = 0;
    std::string pattern;
    std::size_t line = 0;
};

/// Lines: `W <lpn> <pattern>`, `R <lpn>`, `T <lpn>`, `GC`; `#` starts a comment.
std::vector<TraceOp> parse_trace(std::istream& in);

/// Patterns: zero, byte:<v>, rand:<seed>, ratio:<target>:<seed>.
std::vector<std::uint8_t> pattern_bytes(const std::string& pattern);

struct TraceResult {
    std::uint64_t writes = 0;
    std::uint64_t reads = 0;
    std::uint64_t trims = 0;
    std::uint64_t gc_calls = 0;
    std::uint64_t gc_futile = 0;
    std::uint64_t no_space = 0;
    std::uint64_t unmapped_reads = 0;
    std::uint64_t shadow_mismatches = 0;
};

/// Replays `ops` and checks every read against a shadow copy of the last
/// data written to each page. No-space writes are counted and skipped.
TraceResult run_trace(Simulator& sim, const std::vector<TraceOp>& ops, bool check_invariants = false);

std::string trace_result_json(const TraceResult& r, const Metrics& m, int indent = 2);

} // namespace dpz::ftl
