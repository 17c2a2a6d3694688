#include "dpz/ftl.hpp"

#include "dpz/bench.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace dpz::ftl {

namespace {

constexpr std::uint8_t kErased = 0xff;

struct Fnv {
    std::uint64_t h = 1469598103934665603ull;
    void add(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    }
};

std::size_t distinct_pages(const std::vector<Segment>& segs) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (i == 0 || segs[i].page_id != segs[i - 1].page_id) ++n;
    }
    return n;
}

} // namespace

void NandGeometry::validate() const {
    if (page_size < 256 || page_size > kLogicalPage || (page_size & (page_size - 1)) != 0) {
        throw InvalidArgument("page_size must be a power of two in 256..4096");
    }
    if (pages_per_block == 0 || block_count == 0) {
        throw InvalidArgument("geometry counts must be positive");
    }
    if (pages_per_block * page_size < 2 * kLogicalPage) {
        throw InvalidArgument("block must hold at least two logical pages");
    }
    if (!(op_fraction >= 0.05 && op_fraction <= 0.5)) {
        throw InvalidArgument("over-provisioning must be within [0.05, 0.5]");
    }
}

std::size_t NandGeometry::user_pages() const {
    return static_cast<std::size_t>(std::floor(double(total_pages()) * (1.0 - op_fraction)));
}

std::optional<double> Metrics::waf() const {
    if (host_bytes_written == 0) return std::nullopt;
    return double(nand_bytes_programmed) / double(host_bytes_written);
}

std::optional<double> Metrics::raf() const {
    if (host_reads == 0) return std::nullopt;
    return double(pages_read) / double(host_reads);
}

double Metrics::space_utilization() const {
    return user_capacity_bytes == 0 ? 0 : double(live_bytes) / double(user_capacity_bytes);
}

std::string metrics_json(const Metrics& m, int indent) {
    auto opt = [](std::optional<double> v) -> nlohmann::ordered_json {
        return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    nlohmann::ordered_json j;
    j["host_writes"] = m.host_writes;
    j["host_reads"] = m.host_reads;
    j["host_bytes_written"] = m.host_bytes_written;
    j["host_bytes_read"] = m.host_bytes_read;
    j["nand_bytes_programmed"] = m.nand_bytes_programmed;
    j["nand_bytes_read"] = m.nand_bytes_read;
    j["pages_read"] = m.pages_read;
    j["padding_bytes"] = m.padding_bytes;
    j["gc_runs"] = m.gc_runs;
    j["gc_bytes_relocated"] = m.gc_bytes_relocated;
    j["gc_pages_read"] = m.gc_pages_read;
    j["erases"] = m.erases;
    j["live_bytes"] = m.live_bytes;
    j["mapped_lpns"] = m.mapped_lpns;
    j["exposed_lpns"] = m.exposed_lpns;
    j["user_capacity_bytes"] = m.user_capacity_bytes;
    j["raw_records"] = m.raw_records;
    j["compressed_records"] = m.compressed_records;
    j["records_over_two_pages"] = m.records_over_two_pages;
    j["max_pages_per_read"] = m.max_pages_per_read;
    j["waf"] = opt(m.waf());
    j["raf"] = opt(m.raf());
    j["space_utilization"] = m.space_utilization();
    j["block_valid_bytes"] = m.block_valid_bytes;
    return j.dump(indent);
}

Simulator::Simulator(const SimOptions& opts) : geo_(opts.geometry), opts_(opts) {
    geo_.validate();
    if (opts_.gc_reserve_blocks + 2 > geo_.block_count) {
        throw InvalidArgument("too few blocks for the gc reserve");
    }
    blocks_.resize(geo_.block_count);
    for (std::size_t b = 0; b < geo_.block_count; ++b) free_.push_back(b);
    m_.user_capacity_bytes = std::uint64_t{geo_.user_pages()} * geo_.page_size;
    configure_capacity(opts.capacity_factor);
}

std::uint64_t Simulator::configure_capacity(double factor) {
    if (!(factor >= 1.0 && factor <= 4.0)) {
        throw InvalidArgument("capacity factor must be within [1, 4]");
    }
    const auto user_lpns = m_.user_capacity_bytes / kLogicalPage;
    const auto n = static_cast<std::size_t>(std::floor(double(user_lpns) * factor));
    for (std::size_t lpn = n; lpn < l2p_.size(); ++lpn) {
        if (l2p_[lpn]) {
            throw InvalidArgument("mapped pages beyond the new capacity");
        }
    }
    l2p_.resize(n);
    opts_.capacity_factor = factor;
    m_.exposed_lpns = n;
    return n;
}

const MappingEntry* Simulator::entry(std::uint64_t lpn) const {
    if (lpn >= l2p_.size() || !l2p_[lpn]) return nullptr;
    return &*l2p_[lpn];
}

bool Simulator::fits(std::size_t len, bool raw) const {
    if (!open_) return false;
    if (raw) {
        const std::size_t start = open_ptr_ == 0 ? open_page_ : open_page_ + 1;
        return start + raw_pages() <= geo_.pages_per_block;
    }
    return open_page_ * geo_.page_size + open_ptr_ + len <= geo_.block_bytes();
}

void Simulator::close_open() {
    if (!open_) return;
    if (open_ptr_ != 0) {
        const std::size_t pad = geo_.page_size - open_ptr_;
        m_.padding_bytes += pad;
        m_.nand_bytes_programmed += pad;
    }
    blocks_[*open_].state = BlockState::Closed;
    open_.reset();
}

void Simulator::open_block(std::size_t b) {
    Block& blk = blocks_[b];
    blk.state = BlockState::Open;
    if (blk.data.empty()) blk.data.assign(geo_.block_bytes(), kErased);
    open_ = b;
    open_page_ = 0;
    open_ptr_ = 0;
}

std::vector<Segment> Simulator::append(std::span<const std::uint8_t> bytes, bool raw) {
    Block& blk = blocks_[*open_];
    if (raw && open_ptr_ != 0) {
        const std::size_t pad = geo_.page_size - open_ptr_;
        m_.padding_bytes += pad;
        m_.nand_bytes_programmed += pad;
        ++open_page_;
        open_ptr_ = 0;
    }
    std::vector<Segment> segs;
    std::size_t done = 0;
    while (done < bytes.size()) {
        const std::size_t n = std::min(bytes.size() - done, geo_.page_size - open_ptr_);
        std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(done), n,
                    blk.data.begin() + static_cast<std::ptrdiff_t>(open_page_ * geo_.page_size + open_ptr_));
        segs.push_back({static_cast<std::uint32_t>(*open_ * geo_.pages_per_block + open_page_),
                        static_cast<std::uint32_t>(open_ptr_), static_cast<std::uint32_t>(n),
                        !segs.empty()});
        done += n;
        open_ptr_ += n;
        if (open_ptr_ == geo_.page_size) {
            ++open_page_;
            open_ptr_ = 0;
        }
    }
    m_.nand_bytes_programmed += bytes.size();
    blk.valid_bytes += bytes.size();
    if (open_page_ == geo_.pages_per_block) {
        close_open();
    }
    return segs;
}

std::vector<Segment> Simulator::place(std::span<const std::uint8_t> bytes, bool raw, bool for_gc) {
    while (!fits(bytes.size(), raw)) {
        close_open();
        if (!for_gc) {
            // Collect until the free pool is back above the reserve.
            std::size_t attempts = 0;
            while (free_.size() <= opts_.gc_reserve_blocks) {
                if (++attempts > geo_.block_count) {
                    throw NoSpace();
                }
                try {
                    gc_once();
                } catch (const GcFutile&) {
                    throw NoSpace();
                }
            }
            if (fits(bytes.size(), raw)) {
                break;
            }
            close_open();
        }
        if (free_.empty()) {
            throw NoSpace();
        }
        open_block(free_.front());
        free_.pop_front();
    }
    return append(bytes, raw);
}

std::vector<std::uint8_t> Simulator::gather(const MappingEntry& e) const {
    std::vector<std::uint8_t> out;
    out.reserve(e.stored_len);
    for (const auto& s : e.segments) {
        const std::size_t b = s.page_id / geo_.pages_per_block;
        const std::size_t p = s.page_id % geo_.pages_per_block;
        const auto at = blocks_[b].data.begin() + static_cast<std::ptrdiff_t>(p * geo_.page_size + s.offset);
        out.insert(out.end(), at, at + s.len);
    }
    return out;
}

void Simulator::drop(std::uint64_t lpn) {
    auto& slot = l2p_[lpn];
    if (!slot) return;
    blocks_[slot->block].valid_bytes -= slot->stored_len;
    m_.live_bytes -= slot->stored_len;
    --m_.mapped_lpns;
    (slot->mode == format::Mode::Raw ? m_.raw_records : m_.compressed_records) -= 1;
    if (distinct_pages(slot->segments) > 2) --m_.records_over_two_pages;
    slot.reset();
}

void Simulator::host_write(std::uint64_t lpn, std::span<const std::uint8_t> data) {
    if (lpn >= l2p_.size()) {
        throw InvalidArgument("lpn out of range");
    }
    if (data.size() != kLogicalPage) {
        throw InvalidArgument("host writes are 4096 bytes");
    }
    const format::ChunkRecord rec = format::compress_chunk(data, {.policy = opts_.policy});
    const bool raw = rec.mode == format::Mode::Raw;
    std::vector<std::uint8_t> stored;
    if (raw) {
        stored = rec.payload;
    } else {
        format::write_record(stored, rec, format::kDefaultChunkLog);
    }

    const std::uint64_t old = l2p_[lpn] ? l2p_[lpn]->stored_len : 0;
    if (m_.live_bytes - old + stored.size() > m_.user_capacity_bytes) {
        throw NoSpace();
    }

    std::vector<Segment> segs = place(stored, raw, false);
    const std::size_t block = segs.front().page_id / geo_.pages_per_block;

    // Old location becomes garbage in the same step the new one is mapped.
    drop(lpn);
    MappingEntry e;
    e.segments = std::move(segs);
    e.mode = rec.mode;
    e.orig_len = rec.orig_len;
    e.stored_len = static_cast<std::uint32_t>(stored.size());
    e.block = static_cast<std::uint32_t>(block);
    blocks_[block].lpns.push_back(lpn);
    m_.live_bytes += e.stored_len;
    ++m_.mapped_lpns;
    (raw ? m_.raw_records : m_.compressed_records) += 1;
    if (distinct_pages(e.segments) > 2) ++m_.records_over_two_pages;
    l2p_[lpn] = std::move(e);

    ++m_.host_writes;
    m_.host_bytes_written += kLogicalPage;
}

std::vector<std::uint8_t> Simulator::host_read(std::uint64_t lpn) {
    if (lpn >= l2p_.size()) {
        throw InvalidArgument("lpn out of range");
    }
    if (!l2p_[lpn]) {
        // Served without touching flash; kept out of the read counters.
        if (opts_.zero_unmapped) {
            return std::vector<std::uint8_t>(kLogicalPage, 0);
        }
        throw UnmappedRead();
    }
    ++m_.host_reads;
    m_.host_bytes_read += kLogicalPage;
    const MappingEntry& e = *l2p_[lpn];
    const auto pages = static_cast<std::uint32_t>(distinct_pages(e.segments));
    m_.pages_read += pages;
    m_.nand_bytes_read += std::uint64_t{pages} * geo_.page_size;
    m_.max_pages_per_read = std::max(m_.max_pages_per_read, pages);

    const std::vector<std::uint8_t> bytes = gather(e);
    if (e.mode == format::Mode::Raw) {
        return bytes;
    }
    std::size_t pos = 0;
    const format::ChunkRecord rec = format::read_record(bytes, pos, format::kDefaultChunkLog);
    return format::decompress_chunk(rec);
}

void Simulator::trim(std::uint64_t lpn) {
    if (lpn >= l2p_.size()) {
        throw InvalidArgument("lpn out of range");
    }
    drop(lpn);
}

std::optional<std::size_t> Simulator::pick_victim() const {
    std::optional<std::size_t> best;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const Block& blk = blocks_[b];
        if (blk.state != BlockState::Closed || blk.valid_bytes >= geo_.block_bytes()) continue;
        if (!best || blk.valid_bytes < blocks_[*best].valid_bytes) best = b;
    }
    return best;
}

void Simulator::relocate_and_erase(std::size_t victim) {
    Block& v = blocks_[victim];
    // Live records of the victim, moved in physical order.
    std::vector<std::pair<std::uint64_t, std::uint64_t>> live; // (position, lpn)
    std::unordered_set<std::uint64_t> seen;
    for (std::uint64_t lpn : v.lpns) {
        if (!seen.insert(lpn).second) continue;
        const auto& slot = l2p_[lpn];
        if (!slot || slot->block != victim) continue;
        const Segment& s = slot->segments.front();
        live.emplace_back(std::uint64_t{s.page_id} * geo_.page_size + s.offset, lpn);
    }
    std::sort(live.begin(), live.end());
    for (const auto& [position, lpn] : live) {
        auto& slot = l2p_[lpn];
        const std::vector<std::uint8_t> bytes = gather(*slot);
        const auto pages = distinct_pages(slot->segments);
        m_.gc_pages_read += pages;
        m_.nand_bytes_read += pages * geo_.page_size;

        std::vector<Segment> segs = place(bytes, slot->mode == format::Mode::Raw, true);
        const std::size_t nb = segs.front().page_id / geo_.pages_per_block;
        v.valid_bytes -= slot->stored_len;
        if (pages > 2) --m_.records_over_two_pages;
        if (distinct_pages(segs) > 2) ++m_.records_over_two_pages;
        slot->segments = std::move(segs);
        slot->block = static_cast<std::uint32_t>(nb);
        blocks_[nb].lpns.push_back(lpn);
        m_.gc_bytes_relocated += bytes.size();
    }
    if (v.valid_bytes != 0) {
        throw std::logic_error("victim still holds live data after relocation");
    }
    v.lpns.clear();
    std::fill(v.data.begin(), v.data.end(), kErased);
    v.state = BlockState::Free;
    ++v.erase_count;
    ++m_.erases;
    free_.push_back(victim);
}

void Simulator::gc_once() {
    const auto victim = pick_victim();
    if (!victim) {
        throw GcFutile();
    }
    ++m_.gc_runs;
    relocate_and_erase(*victim);
}

std::size_t Simulator::gc_step() {
    gc_once();
    return geo_.pages_per_block;
}

Metrics Simulator::metrics() const {
    Metrics m = m_;
    m.block_valid_bytes.clear();
    for (const auto& b : blocks_) m.block_valid_bytes.push_back(b.valid_bytes);
    return m;
}

void Simulator::check_invariants() const {
    auto fail = [](const std::string& what) { throw std::logic_error("invariant violated: " + what); };
    std::map<std::uint32_t, std::vector<std::pair<std::uint32_t, std::uint32_t>>> ranges;
    std::vector<std::uint64_t> valid(blocks_.size(), 0);
    std::uint64_t live = 0, mapped = 0;
    for (std::size_t lpn = 0; lpn < l2p_.size(); ++lpn) {
        if (!l2p_[lpn]) continue;
        const MappingEntry& e = *l2p_[lpn];
        ++mapped;
        if (e.segments.empty()) fail("empty segment list");
        std::uint64_t sum = 0;
        for (std::size_t i = 0; i < e.segments.size(); ++i) {
            const Segment& s = e.segments[i];
            if (s.offset + s.len > geo_.page_size || s.len == 0) fail("segment outside page");
            if (s.page_id / geo_.pages_per_block != e.block) fail("segment outside its block");
            if (s.continuation != (i != 0)) fail("continuation flag");
            if (i != 0) {
                const Segment& prev = e.segments[i - 1];
                if (s.page_id != prev.page_id + 1) fail("continuation not on the next page");
                if (prev.offset + prev.len != geo_.page_size || s.offset != 0) fail("segment gap");
            }
            if (blocks_[e.block].state == BlockState::Free) fail("live segment in erased block");
            ranges[s.page_id].emplace_back(s.offset, s.offset + s.len);
            sum += s.len;
        }
        if (sum != e.stored_len) fail("segment lengths differ from record size");
        if (e.mode == format::Mode::Raw && (e.segments.front().offset != 0 || e.stored_len != kLogicalPage))
            fail("raw page not aligned");
        valid[e.block] += sum;
        live += sum;
    }
    for (auto& [page, rs] : ranges) {
        std::sort(rs.begin(), rs.end());
        for (std::size_t i = 1; i < rs.size(); ++i) {
            if (rs[i].first < rs[i - 1].second) fail("overlapping segments on page " + std::to_string(page));
        }
    }
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        if (valid[b] != blocks_[b].valid_bytes) fail("block valid count for block " + std::to_string(b));
    }
    if (live != m_.live_bytes) fail("live byte total");
    if (mapped != m_.mapped_lpns) fail("mapped count");
}

std::uint64_t Simulator::state_hash() const {
    Fnv f;
    for (std::size_t lpn = 0; lpn < l2p_.size(); ++lpn) {
        if (!l2p_[lpn]) continue;
        const auto& e = *l2p_[lpn];
        f.add(lpn);
        f.add(static_cast<std::uint64_t>(e.mode));
        f.add(e.stored_len);
        for (const auto& s : e.segments) {
            f.add(s.page_id);
            f.add(s.offset);
            f.add(s.len);
        }
    }
    for (const auto& b : blocks_) {
        f.add(static_cast<std::uint64_t>(b.state));
        f.add(b.valid_bytes);
        f.add(b.erase_count);
    }
    for (auto b : free_) f.add(b);
    f.add(open_ ? *open_ : ~0ull);
    f.add(open_page_);
    f.add(open_ptr_);
    for (std::uint64_t v : {m_.host_writes, m_.host_reads, m_.nand_bytes_programmed, m_.nand_bytes_read,
                            m_.pages_read, m_.gc_bytes_relocated, m_.erases}) {
        f.add(v);
    }
    return f.h;
}

// Trace replay.

namespace {

template <typename T>
T parse_number(std::string_view s, std::size_t line, const char* what) {
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw InvalidArgument("trace line " + std::to_string(line) + ": bad " + what);
    }
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

} // namespace

std::vector<TraceOp> parse_trace(std::istream& in) {
    std::vector<TraceOp> ops;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        std::istringstream ls(raw);
        std::string cmd, a, b, extra;
        ls >> cmd >> a >> b >> extra;
        if (cmd.empty()) continue;
        auto bad = [&](const std::string& why) {
            return InvalidArgument("trace line " + std::to_string(line) + ": " + why);
        };
        TraceOp op;
        op.line = line;
        if (cmd == "W") {
            if (a.empty() || b.empty() || !extra.empty()) throw bad("expected W <lpn> <pattern>");
            op.kind = TraceOp::Kind::Write;
            op.lpn = parse_number<std::uint64_t>(a, line, "lpn");
            (void)pattern_bytes(b);
            op.pattern = b;
        } else if (cmd == "R" || cmd == "T") {
            if (a.empty() || !b.empty()) throw bad("expected " + cmd + " <lpn>");
            op.kind = cmd == "R" ? TraceOp::Kind::Read : TraceOp::Kind::Trim;
            op.lpn = parse_number<std::uint64_t>(a, line, "lpn");
        } else if (cmd == "GC") {
            if (!a.empty()) throw bad("GC takes no arguments");
            op.kind = TraceOp::Kind::Gc;
        } else {
            throw bad("unknown command '" + cmd + "'");
        }
        ops.push_back(std::move(op));
    }
    return ops;
}

std::vector<std::uint8_t> pattern_bytes(const std::string& pattern) {
    const auto parts = split(pattern, ':');
    auto bad = [&] { return InvalidArgument("bad pattern '" + pattern + "'"); };
    if (parts[0] == "zero" && parts.size() == 1) {
        return std::vector<std::uint8_t>(kLogicalPage, 0);
    }
    if (parts[0] == "byte" && parts.size() == 2) {
        const auto v = parse_number<unsigned>(parts[1], 0, "byte");
        if (v > 255) throw bad();
        return std::vector<std::uint8_t>(kLogicalPage, static_cast<std::uint8_t>(v));
    }
    if (parts[0] == "rand" && parts.size() == 2) {
        std::mt19937_64 rng(parse_number<std::uint64_t>(parts[1], 0, "seed"));
        std::vector<std::uint8_t> out(kLogicalPage);
        for (auto& x : out) x = static_cast<std::uint8_t>(rng());
        return out;
    }
    if (parts[0] == "ratio" && parts.size() == 3) {
        double t = 0;
        const auto [p, ec] = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), t);
        if (ec != std::errc() || p != parts[1].data() + parts[1].size() || t < 0 || t > 1) throw bad();
        return bench::gen_data(t, kLogicalPage, parse_number<std::uint64_t>(parts[2], 0, "seed"));
    }
    throw bad();
}

TraceResult run_trace(Simulator& sim, const std::vector<TraceOp>& ops, bool check_invariants) {
    TraceResult r;
    std::map<std::uint64_t, std::vector<std::uint8_t>> shadow;
    std::map<std::string, std::vector<std::uint8_t>> patterns;
    for (const auto& op : ops) {
        switch (op.kind) {
        case TraceOp::Kind::Write: {
            auto it = patterns.find(op.pattern);
            if (it == patterns.end()) it = patterns.emplace(op.pattern, pattern_bytes(op.pattern)).first;
            try {
                sim.host_write(op.lpn, it->second);
                shadow[op.lpn] = it->second;
                ++r.writes;
            } catch (const NoSpace&) {
                ++r.no_space;
            }
            break;
        }
        case TraceOp::Kind::Read: {
            ++r.reads;
            const auto s = shadow.find(op.lpn);
            std::vector<std::uint8_t> got;
            try {
                got = sim.host_read(op.lpn);
            } catch (const UnmappedRead&) {
                ++r.unmapped_reads;
                if (s != shadow.end()) ++r.shadow_mismatches;
                break;
            }
            const std::vector<std::uint8_t> want =
                s != shadow.end() ? s->second : std::vector<std::uint8_t>(kLogicalPage, 0);
            if (s == shadow.end()) ++r.unmapped_reads;
            if (got != want) ++r.shadow_mismatches;
            break;
        }
        case TraceOp::Kind::Trim:
            sim.trim(op.lpn);
            shadow.erase(op.lpn);
            ++r.trims;
            break;
        case TraceOp::Kind::Gc:
            ++r.gc_calls;
            try {
                sim.gc_step();
            } catch (const GcFutile&) {
                ++r.gc_futile;
            }
            break;
        }
        if (check_invariants) sim.check_invariants();
    }
    return r;
}

std::string trace_result_json(const TraceResult& r, const Metrics& m, int indent) {
    nlohmann::ordered_json j;
    j["trace"] = {{"writes", r.writes},         {"reads", r.reads},
                  {"trims", r.trims},           {"gc_calls", r.gc_calls},
                  {"gc_futile", r.gc_futile},   {"no_space", r.no_space},
                  {"unmapped_reads", r.unmapped_reads},
                  {"shadow_mismatches", r.shadow_mismatches}};
    j["metrics"] = nlohmann::ordered_json::parse(metrics_json(m, -1));
    return j.dump(indent);
}

} // namespace dpz::ftl
