#include "dpz/bench.hpp"

#include "dpz/cycle_model.hpp"
#include "dpz/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>

namespace dpz::bench {

namespace {

constexpr std::size_t kSegment = 32;
constexpr std::size_t kMotif = 8;
constexpr std::size_t kSegmentsPerPage = format::kPageSize / kSegment;
constexpr std::uint64_t kCalibrationSeed = 0x5eed'ca11;
constexpr std::size_t kCalibrationPages = 16;

using Rng = std::mt19937_64;

// rng() % n keeps output identical across standard libraries.
std::size_t below(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

std::vector<std::uint8_t> generate(double fraction, std::size_t len, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::uint8_t> out(len);
    std::vector<std::size_t> order;
    for (std::size_t base = 0; base < len; base += format::kPageSize) {
        const std::size_t n = std::min(format::kPageSize, len - base);
        const std::size_t nseg = (n + kSegment - 1) / kSegment;
        const auto k = static_cast<std::size_t>(std::lround(fraction * double(nseg)));

        std::array<std::uint8_t, kMotif> motif{};
        for (auto& b : motif) b = static_cast<std::uint8_t>(rng());
        order.resize(nseg);
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = nseg; i > 1; --i) std::swap(order[i - 1], order[below(rng, i)]);
        std::vector<bool> noisy(nseg, false);
        for (std::size_t i = 0; i < k; ++i) noisy[order[i]] = true;

        for (std::size_t s = 0; s < nseg; ++s) {
            const std::size_t end = std::min(n, (s + 1) * kSegment);
            for (std::size_t i = s * kSegment; i < end; ++i) {
                out[base + i] = noisy[s] ? static_cast<std::uint8_t>(rng()) : motif[i % kMotif];
            }
        }
    }
    return out;
}

double calibration_ratio(std::size_t random_segments) {
    const double f = double(random_segments) / double(kSegmentsPerPage);
    return measured_ratio(generate(f, kCalibrationPages * format::kPageSize, kCalibrationSeed));
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + p.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) {
        throw IoError("cannot read " + p.string());
    }
    return ss.str();
}

// Mini-corpus generators.

const char* const kWords[] = {
    "the", "of", "and", "to", "in", "a", "is", "that", "for", "it", "as", "was", "with", "be",
    "by", "on", "not", "he", "this", "are", "or", "his", "from", "at", "which", "but", "have",
    "an", "had", "they", "you", "were", "their", "one", "all", "we", "can", "her", "has", "there",
    "been", "if", "more", "when", "will", "would", "who", "so", "no", "storage", "device",
    "controller", "memory", "latency", "block", "sector", "throughput", "firmware", "queue",
    "channel", "engine", "program", "erase", "buffer", "command", "request", "host", "drive"};

std::string word(Rng& rng) {
    constexpr std::size_t n = std::size(kWords);
    // Skewed pick: short common words dominate.
    const std::size_t a = below(rng, n), b = below(rng, n);
    return kWords[std::min(a, b)];
}

std::vector<std::uint8_t> make_text(Rng& rng, std::size_t len) {
    std::string s;
    while (s.size() < len) {
        const std::size_t words = 6 + below(rng, 18);
        for (std::size_t i = 0; i < words; ++i) {
            std::string w = word(rng);
            if (i == 0) w[0] = static_cast<char>(std::toupper(w[0]));
            s += w;
            s += (i + 1 == words) ? (below(rng, 5) == 0 ? ".\n" : ". ") : (below(rng, 9) == 0 ? ", " : " ");
        }
    }
    s.resize(len);
    return {s.begin(), s.end()};
}

std::vector<std::uint8_t> make_log(Rng& rng, std::size_t len) {
    static const char* levels[] = {"INFO", "INFO", "INFO", "DEBUG", "WARN", "ERROR"};
    static const char* paths[] = {"/api/v1/blocks", "/api/v1/pages", "/health", "/metrics",
                                  "/api/v1/namespaces", "/static/app.js"};
    std::string s;
    std::uint64_t t = 1700000000000;
    char line[256];
    while (s.size() < len) {
        t += below(rng, 2000);
        const char* level = levels[below(rng, 6)];
        const std::size_t worker = below(rng, 8);
        const std::size_t net = below(rng, 4);
        const std::size_t host = below(rng, 256);
        const char* path = paths[below(rng, 6)];
        const int status = below(rng, 10) == 0 ? 404 : 200;
        const std::size_t bytes = below(rng, 65536);
        const std::size_t dur = below(rng, 500);
        std::snprintf(line, sizeof line,
                      "%llu %-5s [worker-%zu] 10.0.%zu.%zu \"GET %s\" status=%d bytes=%zu dur_ms=%zu\n",
                      static_cast<unsigned long long>(t), level, worker, net, host, path, status,
                      bytes, dur);
        s += line;
    }
    s.resize(len);
    return {s.begin(), s.end()};
}

std::vector<std::uint8_t> make_records(Rng& rng, std::size_t len) {
    std::vector<std::uint8_t> out;
    std::uint32_t id = 1000;
    while (out.size() < len) {
        std::array<std::uint8_t, 64> rec{};
        id += 1 + static_cast<std::uint32_t>(below(rng, 3));
        std::memcpy(rec.data(), &id, 4);
        const auto qty = static_cast<std::uint16_t>(below(rng, 100));
        std::memcpy(rec.data() + 4, &qty, 2);
        const float price = float(below(rng, 10000)) / 100.0f;
        std::memcpy(rec.data() + 8, &price, 4);
        std::string name = word(rng);
        name += "_" + word(rng);
        std::memcpy(rec.data() + 16, name.data(), std::min<std::size_t>(name.size(), 24));
        rec[40] = static_cast<std::uint8_t>(below(rng, 4));
        out.insert(out.end(), rec.begin(), rec.end());
    }
    out.resize(len);
    return out;
}

std::vector<std::uint8_t> make_image(Rng& rng, std::size_t len) {
    std::vector<std::uint8_t> out(len);
    const std::size_t width = 512;
    for (std::size_t i = 0; i < len; ++i) {
        const std::size_t x = i % width, y = i / width;
        const double v = 128 + 60 * std::sin(double(x) / 40.0) + 50 * std::cos(double(y) / 23.0);
        out[i] = static_cast<std::uint8_t>(std::clamp(v + double(below(rng, 9)) - 4, 0.0, 255.0));
    }
    return out;
}

std::vector<std::uint8_t> make_code(Rng& rng, std::size_t len) {
    static const std::uint8_t ops[][4] = {{0x48, 0x89, 0xe5, 0}, {0x48, 0x8b, 0x45, 1},
                                          {0xe8, 0, 0, 4},       {0x0f, 0x1f, 0x44, 0},
                                          {0x48, 0x83, 0xec, 1}, {0xc3, 0, 0, 0}};
    std::vector<std::uint8_t> out;
    const std::size_t code_len = len * 3 / 4;
    while (out.size() < code_len) {
        const auto& op = ops[below(rng, 6)];
        const std::size_t fixed = op[0] == 0xc3 ? 1 : (op[0] == 0xe8 ? 1 : 3);
        out.insert(out.end(), op, op + fixed);
        for (std::uint8_t i = 0; i < op[3]; ++i) out.push_back(static_cast<std::uint8_t>(rng()));
    }
    out.resize(code_len);
    std::string symbols;
    while (out.size() + symbols.size() < len) {
        symbols += "_ZN3dpz" + word(rng);
        symbols += "_" + word(rng) + "Ev";
        symbols.push_back('\0');
    }
    out.insert(out.end(), symbols.begin(), symbols.end());
    out.resize(len);
    return out;
}

std::vector<std::uint8_t> make_sparse(Rng& rng, std::size_t len) {
    std::vector<std::uint8_t> out(len, 0);
    for (std::size_t page = 0; page < len; page += format::kPageSize) {
        const std::size_t rows = below(rng, 12);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t at = page + below(rng, format::kPageSize - 48);
            for (std::size_t i = 0; i < 48; ++i) out[at + i] = static_cast<std::uint8_t>(rng());
        }
    }
    return out;
}

std::vector<std::uint8_t> make_noise(Rng& rng, std::size_t len) {
    std::vector<std::uint8_t> out(len);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng());
    return out;
}

struct ChunkResult {
    double ratio = 0;
    double entropy = 0;
    format::Mode mode = format::Mode::Raw;
    std::vector<format::PageStats> pages;
};

ChunkResult run_chunk(std::span<const std::uint8_t> chunk, const format::CompressOptions& opts) {
    format::ChunkStats stats;
    const auto rec = format::compress_chunk(chunk, opts, &stats);
    return {format::chunk_ratio(rec, opts.chunk_log), shannon_entropy(chunk).bits_per_symbol,
            rec.mode, std::move(stats.pages)};
}

std::vector<ChunkResult> run_chunks(const std::vector<std::span<const std::uint8_t>>& chunks,
                                    const BenchOptions& opts) {
    std::vector<ChunkResult> out(chunks.size());
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(opts.jobs, chunks.size()));
    std::vector<std::future<void>> futures;
    for (std::size_t w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < chunks.size(); i += workers) {
                out[i] = run_chunk(chunks[i], opts.compress);
            }
        }));
    }
    for (auto& f : futures) f.get();
    return out;
}

BenchRow summarize(std::string name, const std::vector<ChunkResult>& results, std::size_t bytes,
                   double seconds) {
    BenchRow row;
    row.file = std::move(name);
    row.chunks = results.size();
    row.bytes = bytes;
    std::vector<double> ratios;
    std::vector<std::pair<std::uint64_t, huffman::CanonizationTrace>> blocks;
    double h = 0;
    for (const auto& r : results) {
        ratios.push_back(r.ratio);
        h += r.entropy;
        ++row.mode_counts[static_cast<std::size_t>(r.mode)];
        for (const auto& p : r.pages) blocks.emplace_back(p.orig_len, p.trace);
    }
    row.stats = ratio_stats(std::move(ratios));
    row.mean_entropy = results.empty() ? 0 : h / double(results.size());
    row.wall_mb_s = seconds > 0 ? double(bytes) / seconds / 1e6 : 0;
    row.modeled_gbps = cycle::estimate_run(blocks).gbps;
    return row;
}

nlohmann::ordered_json row_json(const BenchRow& r, bool timing) {
    nlohmann::ordered_json j;
    j["file"] = r.file;
    j["chunks"] = r.chunks;
    j["bytes"] = r.bytes;
    j["ratio"] = {{"p5", r.stats.p5},   {"p25", r.stats.p25}, {"median", r.stats.p50},
                  {"p75", r.stats.p75}, {"p95", r.stats.p95}, {"mean", r.stats.mean}};
    nlohmann::ordered_json modes;
    for (std::size_t m = 0; m < 4; ++m) {
        modes[std::string(format::mode_name(static_cast<format::Mode>(m)))] = r.mode_counts[m];
    }
    j["modes"] = modes;
    j["mean_entropy"] = r.mean_entropy;
    j["modeled_gbps"] = r.modeled_gbps;
    if (timing) {
        j["wall_mb_s"] = r.wall_mb_s;
    }
    return j;
}

} // namespace

EntropyReport shannon_entropy(std::span<const std::uint8_t> data) {
    if (data.empty()) {
        throw InvalidArgument("entropy of empty input");
    }
    std::array<std::uint64_t, 256> count{};
    for (auto b : data) ++count[b];
    EntropyReport r;
    r.n = data.size();
    for (std::size_t s = 0; s < 256; ++s) {
        if (count[s] == 0) continue;
        const double p = double(count[s]) / double(data.size());
        r.p[s] = p;
        r.bits_per_symbol -= p * std::log2(p);
    }
    r.bits_per_symbol = std::max(0.0, r.bits_per_symbol);
    return r;
}

double measured_ratio(std::span<const std::uint8_t> data, const format::CompressOptions& opts) {
    if (data.empty()) {
        throw InvalidArgument("ratio of empty input");
    }
    const std::size_t cs = format::chunk_size(opts.chunk_log);
    std::size_t stored = 0;
    for (std::size_t off = 0; off < data.size(); off += cs) {
        const auto rec = format::compress_chunk(data.subspan(off, std::min(cs, data.size() - off)), opts);
        stored += format::record_header_size(opts.chunk_log) + rec.comp_len();
    }
    return double(stored) / double(data.size());
}

double solve_fraction(double target) {
    if (!(target >= 0.0 && target <= 1.0)) {
        throw InvalidArgument("target ratio must be within [0, 1]");
    }
    static std::mutex mu;
    static std::map<double, double> cache;
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(target); it != cache.end()) return it->second;
    }
    // Largest random-segment count whose calibrated ratio stays at or below
    // the target.
    std::size_t lo = 0, hi = kSegmentsPerPage;
    double f;
    if (calibration_ratio(hi) <= target) {
        f = 1.0;
    } else if (calibration_ratio(lo) > target) {
        f = 0.0;
    } else {
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (calibration_ratio(mid) <= target ? lo : hi) = mid;
        }
        f = double(lo) / double(kSegmentsPerPage);
    }
    std::lock_guard lock(mu);
    cache[target] = f;
    return f;
}

std::vector<std::uint8_t> gen_data(double target_ratio, std::size_t len, std::uint64_t seed) {
    return generate(solve_fraction(target_ratio), len, seed);
}

std::vector<CorpusFile> mini_corpus(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<CorpusFile> c;
    c.push_back({"text.txt", make_text(rng, 256 << 10)});
    c.push_back({"server.log", make_log(rng, 192 << 10)});
    c.push_back({"records.bin", make_records(rng, 192 << 10)});
    c.push_back({"image.raw", make_image(rng, 128 << 10)});
    c.push_back({"code.so", make_code(rng, 128 << 10)});
    c.push_back({"sparse.db", make_sparse(rng, 64 << 10)});
    c.push_back({"noise.bin", make_noise(rng, 64 << 10)});
    return c;
}

std::vector<CorpusFile> load_corpus(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (fs::is_regular_file(path, ec)) {
        const std::string s = read_file(path);
        return {{path.filename().string(), {s.begin(), s.end()}}};
    }
    if (!fs::is_directory(path, ec)) {
        throw IoError("cannot read " + path.string());
    }
    std::vector<fs::path> files;
    for (fs::recursive_directory_iterator it(path, ec), end; !ec && it != end; it.increment(ec)) {
        if (it->is_regular_file()) files.push_back(it->path());
    }
    if (ec) {
        throw IoError("cannot read " + path.string());
    }
    std::sort(files.begin(), files.end());
    std::vector<CorpusFile> out;
    for (const auto& f : files) {
        const std::string s = read_file(f);
        out.push_back({fs::relative(f, path).generic_string(), {s.begin(), s.end()}});
    }
    return out;
}

std::vector<std::span<const std::uint8_t>> chunk_corpus(const CorpusFile& file, unsigned chunk_log) {
    if (chunk_log < format::kMinChunkLog || chunk_log > format::kMaxChunkLog) {
        throw InvalidArgument("chunk_log must be within 12..16");
    }
    const std::size_t cs = format::chunk_size(chunk_log);
    std::span<const std::uint8_t> all(file.bytes);
    std::vector<std::span<const std::uint8_t>> out;
    for (std::size_t off = 0; off < all.size(); off += cs) {
        out.push_back(all.subspan(off, std::min(cs, all.size() - off)));
    }
    return out;
}

double percentile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0;
    const double pos = q * double(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - double(lo));
}

RatioStats ratio_stats(std::vector<double> ratios) {
    RatioStats s;
    std::sort(ratios.begin(), ratios.end());
    s.p5 = percentile(ratios, 0.05);
    s.p25 = percentile(ratios, 0.25);
    s.p50 = percentile(ratios, 0.50);
    s.p75 = percentile(ratios, 0.75);
    s.p95 = percentile(ratios, 0.95);
    s.mean = ratios.empty() ? 0 : std::accumulate(ratios.begin(), ratios.end(), 0.0) / double(ratios.size());
    s.ratios = std::move(ratios);
    return s;
}

BenchReport bench_run(const std::vector<CorpusFile>& corpus, const BenchOptions& opts) {
    BenchReport report;
    report.chunk_log = opts.compress.chunk_log;
    report.policy = opts.compress.policy;
    std::vector<ChunkResult> all;
    std::size_t all_bytes = 0;
    double all_seconds = 0;
    for (const auto& file : corpus) {
        const auto chunks = chunk_corpus(file, opts.compress.chunk_log);
        const auto t0 = std::chrono::steady_clock::now();
        auto results = run_chunks(chunks, opts);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.rows.push_back(summarize(file.name, results, file.bytes.size(), secs));
        all_bytes += file.bytes.size();
        all_seconds += secs;
        std::move(results.begin(), results.end(), std::back_inserter(all));
    }
    report.total = summarize("TOTAL", all, all_bytes, all_seconds);
    return report;
}

std::string report_text(const BenchReport& r, bool timing) {
    std::ostringstream os;
    os << "chunk " << format::chunk_size(r.chunk_log) << " B, mode " << format::policy_name(r.policy)
       << "\n";
    os << std::left << std::setw(24) << "file" << std::right << std::setw(8) << "chunks"
       << std::setw(9) << "median" << std::setw(9) << "p25" << std::setw(9) << "p75"
       << std::setw(9) << "H" << std::setw(13) << "model GB/s";
    if (timing) os << std::setw(13) << "wall MB/s";
    os << "\n";
    auto line = [&](const BenchRow& row) {
        os << std::left << std::setw(24) << row.file << std::right << std::setw(8) << row.chunks
           << std::fixed << std::setprecision(4) << std::setw(9) << row.stats.p50 << std::setw(9)
           << row.stats.p25 << std::setw(9) << row.stats.p75 << std::setw(9) << row.mean_entropy
           << std::setprecision(2) << std::setw(13) << row.modeled_gbps;
        if (timing) os << std::setw(13) << row.wall_mb_s;
        os << "\n";
    };
    for (const auto& row : r.rows) line(row);
    line(r.total);
    return os.str();
}

std::string report_json(const BenchReport& r, bool timing, int indent) {
    nlohmann::ordered_json j;
    j["chunk_log"] = r.chunk_log;
    j["mode"] = format::policy_name(r.policy);
    j["files"] = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) j["files"].push_back(row_json(row, timing));
    j["total"] = row_json(r.total, timing);
    return j.dump(indent);
}

} // namespace dpz::bench
