#include "dpz/bench.hpp"
#include "dpz/error.hpp"
#include "dpz/huffman.hpp"
#include "dpz/lz77.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

using namespace dpz;
using namespace dpz::bench;

namespace {

using Bytes = std::vector<std::uint8_t>;

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("dpz_bench_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

void write_file(const std::filesystem::path& p, const Bytes& b) {
    std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(b.data()),
                                             static_cast<std::streamsize>(b.size()));
}

} // namespace

TEST(Entropy, AnalyticCases) {
    EXPECT_EQ(shannon_entropy(Bytes(4096, 9)).bits_per_symbol, 0.0);
    Bytes uniform;
    for (int r = 0; r < 16; ++r)
        for (int s = 0; s < 256; ++s) uniform.push_back(static_cast<std::uint8_t>(s));
    EXPECT_NEAR(shannon_entropy(uniform).bits_per_symbol, 8.0, 1e-12);
    Bytes half(2048, 0);
    half.insert(half.end(), 2048, 1);
    EXPECT_NEAR(shannon_entropy(half).bits_per_symbol, 1.0, 1e-12);
    const auto r = shannon_entropy(half);
    EXPECT_DOUBLE_EQ(r.p[0], 0.5);
    EXPECT_DOUBLE_EQ(r.p[1], 0.5);
    EXPECT_THROW(shannon_entropy({}), InvalidArgument);
}

TEST(Entropy, BoundsOnRandomInputs) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        Bytes b(1 + rng() % 5000);
        const unsigned alphabet = 1 + rng() % 256;
        for (auto& x : b) x = static_cast<std::uint8_t>(rng() % alphabet);
        const double h = shannon_entropy(b).bits_per_symbol;
        EXPECT_GE(h, 0.0);
        EXPECT_LE(h, std::log2(double(alphabet)) + 1e-12);
    }
}

TEST(Entropy, HuffmanLiteralStreamNeverBeatsEntropy) {
    const auto corpus = mini_corpus();
    for (const auto& f : corpus) {
        for (const auto chunk : chunk_corpus(f, 12)) {
            Bytes lits;
            for (const auto& t : lz77::encode(chunk)) lits.insert(lits.end(), t.literals.begin(), t.literals.end());
            if (lits.size() < 2) continue;
            const auto hist = huffman::histogram(lits);
            const auto code = huffman::build_code(hist);
            const double bits = double(huffman::coded_bits(hist, code.table.lengths));
            EXPECT_GE(bits / double(lits.size()), shannon_entropy(lits).bits_per_symbol - 1e-9) << f.name;
        }
    }
}

TEST(GenData, Extremes) {
    const auto noise = gen_data(1.0, 64 << 10, 4);
    EXPECT_GE(measured_ratio(noise), 0.99);
    const auto flat = gen_data(0.0, 64 << 10, 4);
    EXPECT_LT(measured_ratio(flat), 0.05);
    EXPECT_THROW(gen_data(1.5, 10, 1), InvalidArgument);
    EXPECT_THROW(gen_data(-0.1, 10, 1), InvalidArgument);
}

TEST(GenData, DeterministicPerSeed) {
    EXPECT_EQ(gen_data(0.4, 10000, 7), gen_data(0.4, 10000, 7));
    EXPECT_NE(gen_data(0.4, 10000, 7), gen_data(0.4, 10000, 8));
    EXPECT_EQ(gen_data(0.4, 10000, 7).size(), 10000u);
}

TEST(GenData, SweepIsMonotoneAndClose) {
    double prev = 0;
    for (int i = 0; i <= 10; ++i) {
        const double target = i / 10.0;
        const double got = measured_ratio(gen_data(target, 256 << 10, 77));
        EXPECT_GE(got, prev) << "target " << target;
        EXPECT_NEAR(got, target, 0.07) << "target " << target;
        prev = got;
    }
}

TEST(GenData, FractionIsMonotone) {
    double prev = 0;
    for (int i = 0; i <= 20; ++i) {
        const double f = solve_fraction(i / 20.0);
        EXPECT_GE(f, prev);
        prev = f;
    }
}

TEST(Stats, PercentilesInterpolate) {
    const auto s = ratio_stats({0.4, 0.1, 0.3, 0.2, 0.5});
    EXPECT_DOUBLE_EQ(s.p50, 0.3);
    EXPECT_DOUBLE_EQ(s.p25, 0.2);
    EXPECT_DOUBLE_EQ(s.p75, 0.4);
    EXPECT_NEAR(s.p5, 0.12, 1e-12);
    EXPECT_NEAR(s.p95, 0.48, 1e-12);
    EXPECT_NEAR(s.mean, 0.3, 1e-12);
    EXPECT_EQ(ratio_stats({0.7}).p5, 0.7);
    EXPECT_EQ(ratio_stats({}).p50, 0.0);
}

TEST(Stats, PercentilesMonotone) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> v(1 + rng() % 50);
        for (auto& x : v) x = double(rng() % 1000) / 1000.0;
        const auto s = ratio_stats(v);
        EXPECT_LE(s.p5, s.p25);
        EXPECT_LE(s.p25, s.p50);
        EXPECT_LE(s.p50, s.p75);
        EXPECT_LE(s.p75, s.p95);
    }
}

TEST(Corpus, MiniCorpusIsOneMebibyteAndStable) {
    const auto a = mini_corpus();
    const auto b = mini_corpus();
    std::size_t total = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        total += a[i].bytes.size();
        EXPECT_EQ(a[i].bytes, b[i].bytes);
    }
    EXPECT_EQ(total, 1u << 20);
    EXPECT_NE(mini_corpus(7)[0].bytes, a[0].bytes);
    EXPECT_EQ(mini_corpus(7)[0].bytes, mini_corpus(7)[0].bytes);
}

TEST(Corpus, ChunkingKeepsShortTail) {
    CorpusFile f{"x", Bytes(10000, 1)};
    const auto c = chunk_corpus(f, 12);
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c[2].size(), 1808u);
    EXPECT_EQ(chunk_corpus(f, 16).size(), 1u);
    EXPECT_TRUE(chunk_corpus(CorpusFile{"e", {}}, 12).empty());
    EXPECT_THROW(chunk_corpus(f, 11), InvalidArgument);
}

TEST(Corpus, LoadDirectoryInNameOrder) {
    const auto dir = temp_dir("load");
    std::filesystem::create_directories(dir / "sub");
    write_file(dir / "b.bin", Bytes(10, 2));
    write_file(dir / "a.bin", Bytes(5, 1));
    write_file(dir / "sub" / "c.bin", Bytes(3, 3));
    const auto c = load_corpus(dir);
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c[0].name, "a.bin");
    EXPECT_EQ(c[1].name, "b.bin");
    EXPECT_EQ(c[2].name, "sub/c.bin");
    EXPECT_EQ(load_corpus(dir / "a.bin").at(0).bytes, Bytes(5, 1));
    EXPECT_THROW(load_corpus(dir / "missing"), IoError);
    std::filesystem::remove_all(dir);
}

TEST(Bench, SingleZeroFile) {
    const auto r = bench_run({{"zero", Bytes(4096, 0)}});
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0].chunks, 1u);
    EXPECT_LT(r.rows[0].stats.p50, 0.02);
    EXPECT_GT(r.rows[0].modeled_gbps, 0.0);
}

TEST(Bench, ReportsAreDeterministicWithoutTiming) {
    const auto corpus = mini_corpus();
    BenchOptions one;
    BenchOptions four;
    four.jobs = 4;
    const auto a = bench_run(corpus, one);
    const auto b = bench_run(corpus, four);
    EXPECT_EQ(report_json(a, false), report_json(b, false));
    EXPECT_EQ(report_text(a, false), report_text(b, false));
    EXPECT_EQ(a.total.chunks, 256u);
    EXPECT_NE(report_json(a, true).find("wall_mb_s"), std::string::npos);
    EXPECT_EQ(report_json(a, false).find("wall_mb_s"), std::string::npos);
}

TEST(Bench, MiniCorpusSpansTheRatioRange) {
    const auto r = bench_run(mini_corpus());
    EXPECT_GT(r.total.stats.p95, 0.99); // noise stays raw
    EXPECT_LT(r.total.stats.p5, 0.2);   // sparse pages shrink
    for (const auto& row : r.rows) {
        if (row.file == "noise.bin") {
            EXPECT_EQ(row.mode_counts[0], row.chunks);
        }
    }
}

TEST(Bench, WideChunksTrackPageChunks) {
    const auto corpus = mini_corpus();
    BenchOptions wide;
    wide.compress.chunk_log = 16;
    const auto narrow = bench_run(corpus);
    const auto big = bench_run(corpus, wide);
    EXPECT_EQ(big.total.chunks, 16u);
    EXPECT_NEAR(big.total.stats.mean, narrow.total.stats.mean, 0.02);
}
