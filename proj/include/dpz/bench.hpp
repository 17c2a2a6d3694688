#pragma once

// Corpus tooling, synthetic data and ratio statistics.

#include "dpz/format.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dpz::bench {

struct EntropyReport {
    double bits_per_symbol = 0;
    std::array<double, 256> p{};
    std::uint64_t n = 0;
};

/// Empirical Shannon entropy of the byte distribution. Throws on empty input.
EntropyReport shannon_entropy(std::span<const std::uint8_t> data);

/// Bytes whose compressed ratio lands near `target`: 32-byte segments are
/// either seeded random or a repeated 8-byte motif, with the random share
/// per page solved against the real pipeline.
std::vector<std::uint8_t> gen_data(double target_ratio, std::size_t len, std::uint64_t seed);

/// Random-segment fraction used for `target_ratio` (cached per target).
double solve_fraction(double target_ratio);

/// Container ratio of `data` chunked at `chunk_log` (headers included).
double measured_ratio(std::span<const std::uint8_t> data, const format::CompressOptions& opts = {});

struct CorpusFile {
    std::string name;
    std::vector<std::uint8_t> bytes;
};

/// Deterministic 1 MiB corpus: text, logs, structured records, an
/// executable-like table region, sparse data and noise.
inline constexpr std::uint64_t kCorpusSeed = 0xd1'5c0'4b05;
std::vector<CorpusFile> mini_corpus(std::uint64_t seed = kCorpusSeed);

/// A file, or every regular file under a directory in name order.
/// Throws IoError when the path is missing or unreadable.
std::vector<CorpusFile> load_corpus(const std::filesystem::path& path);

/// Per-file chunking; the last chunk of a file may be short.
std::vector<std::span<const std::uint8_t>> chunk_corpus(const CorpusFile& file, unsigned chunk_log);

struct RatioStats {
    std::vector<double> ratios;
    double p5 = 0, p25 = 0, p50 = 0, p75 = 0, p95 = 0, mean = 0;
};

/// Percentiles use linear interpolation between closest ranks.
RatioStats ratio_stats(std::vector<double> ratios);
double percentile(const std::vector<double>& sorted, double q);

struct BenchRow {
    std::string file;
    std::size_t chunks = 0;
    std::size_t bytes = 0;
    RatioStats stats;
    double mean_entropy = 0;
    double wall_mb_s = 0;
    double modeled_gbps = 0;
    std::array<std::size_t, 4> mode_counts{};
};

struct BenchReport {
    unsigned chunk_log = format::kDefaultChunkLog;
    format::Policy policy = format::Policy::Auto;
    std::vector<BenchRow> rows;
    BenchRow total;
};

struct BenchOptions {
    format::CompressOptions compress;
    unsigned jobs = 1;
};

BenchReport bench_run(const std::vector<CorpusFile>& corpus, const BenchOptions& opts = {});

std::string report_text(const BenchReport& r, bool timing = true);
std::string report_json(const BenchReport& r, bool timing = true, int indent = 2);

} // namespace dpz::bench
