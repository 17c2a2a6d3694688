#include "dpz/error.hpp"
#include "dpz/huffman.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace dpz;
using namespace dpz::huffman;

namespace {

Histogram to_hist(const oracle::Hist& h) {
    Histogram out{};
    std::copy(h.begin(), h.end(), out.begin());
    return out;
}

Histogram fibonacci_hist(std::size_t n) {
    Histogram h{};
    std::uint64_t a = 1, b = 1;
    for (std::size_t i = 0; i < n; ++i) {
        h[i] = a;
        const std::uint64_t c = a + b;
        a = b;
        b = c;
    }
    return h;
}

unsigned max_len(const CodeLengths& l) { return *std::max_element(l.begin(), l.end()); }

} // namespace

TEST(BuildLengths, UniformIsBalanced) {
    Histogram h;
    h.fill(1);
    const auto l = build_lengths(h);
    for (auto v : l) EXPECT_EQ(v, 8);
}

TEST(BuildLengths, FibonacciDepthMatchesTextbook) {
    const auto h = fibonacci_hist(20);
    const auto l = build_lengths(h);
    EXPECT_EQ(max_len(l), 19u);
    const auto ref = oracle::textbook_huffman_depths(oracle::Hist(h.begin(), h.end()));
    EXPECT_EQ(coded_bits(h, l),
              oracle::code_cost(oracle::Hist(h.begin(), h.end()), ref));
}

TEST(BuildLengths, SingleSymbolGetsLengthOne) {
    Histogram h{};
    h['q'] = 99;
    const auto l = build_lengths(h);
    EXPECT_EQ(l['q'], 1);
    EXPECT_EQ(std::count(l.begin(), l.end(), 0), 255);
}

TEST(BuildLengths, EmptyHistogram) {
    Histogram h{};
    try {
        build_lengths(h);
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_STREQ(e.what(), "empty histogram");
    }
}

TEST(BuildLengths, OptimalAgainstTextbook) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 300; ++i) {
        const auto h = oracle::random_histogram(rng);
        const auto ours = build_lengths(to_hist(h));
        EXPECT_EQ(coded_bits(to_hist(h), ours),
                  oracle::code_cost(h, oracle::textbook_huffman_depths(h)));
        EXPECT_EQ(kraft_sum(ours, max_len(ours)), std::uint64_t{1} << max_len(ours));
    }
}

TEST(CapLengths, ShallowCodeIsNoOp) {
    Histogram h;
    h.fill(1);
    const auto l = build_lengths(h);
    const auto capped = cap_lengths(l);
    EXPECT_EQ(capped.lengths, l);
    EXPECT_EQ(capped.trace.deficit, 0);
    EXPECT_EQ(capped.trace.redistribute_cycles, 0u);
    EXPECT_EQ(capped.trace.repair_cycles, 0u);
    EXPECT_EQ(capped.trace.scan_cycles, 256u);
    EXPECT_EQ(capped.trace.n_leaves, 256u);
}

TEST(CapLengths, FibonacciCapped) {
    const auto h = fibonacci_hist(20);
    const auto capped = cap_lengths(build_lengths(h));
    EXPECT_LE(max_len(capped.lengths), 11u);
    std::uint64_t sum = 0;
    for (auto len : capped.lengths) {
        if (len) sum += std::uint64_t{1} << (11 - len);
    }
    EXPECT_EQ(sum, 2048u);
    EXPECT_GT(capped.trace.deficit, 0);
    EXPECT_LE(capped.trace.total(), kWorstCaseCycles);

    // Package-merge finds some valid <= 11 code; ours must be close to it.
    const oracle::Hist th(h.begin(), h.end());
    const auto pm = oracle::package_merge_lengths(th, 11);
    const double pm_cost = static_cast<double>(oracle::code_cost(th, pm));
    EXPECT_LE(static_cast<double>(coded_bits(h, capped.lengths)), pm_cost * 1.03);
}

TEST(CapLengths, UsedSetIsPreserved) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 2000; ++i) {
        const auto h = to_hist(oracle::random_histogram(rng));
        const auto raw = build_lengths(h);
        const auto capped = cap_lengths(raw);
        for (std::size_t s = 0; s < kAlphabet; ++s) {
            ASSERT_EQ(raw[s] == 0, capped.lengths[s] == 0);
        }
    }
}

TEST(CapLengths, KraftDepthAndCycleBoundsOnRandomHistograms) {
    std::mt19937_64 rng(17);
    int deep = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto h = to_hist(oracle::random_histogram(rng));
        const auto raw = build_lengths(h);
        if (max_len(raw) > 11) ++deep;
        const auto capped = cap_lengths(raw);
        ASSERT_LE(max_len(capped.lengths), 11u);
        ASSERT_EQ(kraft_sum(capped.lengths), 2048u);
        ASSERT_EQ(capped.trace.scan_cycles, 256u);
        ASSERT_LE(capped.trace.redistribute_cycles, 10u);
        ASSERT_LE(capped.trace.repair_cycles, 8u);
        ASSERT_LE(capped.trace.total(), kWorstCaseCycles);
    }
    // The generator has to actually exercise the cap.
    EXPECT_GT(deep, 1000);
}

TEST(CapLengths, WeightedSelectionKeepsBoundsAndHelpsCost) {
    std::mt19937_64 rng(31);
    std::uint64_t plain = 0, weighted = 0;
    for (int i = 0; i < 2000; ++i) {
        const auto h = to_hist(oracle::random_histogram(rng));
        const auto raw = build_lengths(h);
        const auto a = cap_lengths(raw);
        const auto b = cap_lengths(raw, kMaxBits, &h);
        ASSERT_EQ(kraft_sum(b.lengths), 2048u);
        ASSERT_LE(max_len(b.lengths), 11u);
        EXPECT_EQ(a.trace.total(), b.trace.total());
        plain += coded_bits(h, a.lengths);
        weighted += coded_bits(h, b.lengths);
    }
    EXPECT_LT(weighted, plain);
}

TEST(CapLengths, PageHistogramsNearPackageMerge) {
    std::mt19937_64 rng(37);
    for (int i = 0; i < 300; ++i) {
        const auto h = oracle::page_histogram(rng);
        const auto code = build_code(to_hist(h));
        const std::vector<unsigned> ours(code.table.lengths.begin(), code.table.lengths.end());
        const double best = double(oracle::code_cost(h, oracle::package_merge_lengths(h, kMaxBits)));
        ASSERT_LE(double(oracle::code_cost(h, ours)), best * 1.03) << "histogram " << i;
    }
}

TEST(CapLengths, SingleSymbolKeepsLengthOne) {
    CodeLengths l{};
    l[9] = 1;
    const auto capped = cap_lengths(l);
    EXPECT_EQ(capped.lengths[9], 1);
    EXPECT_NO_THROW(canonicalize(capped.lengths));
}

TEST(CapLengths, Deterministic) {
    std::mt19937_64 rng(23);
    const auto h = to_hist(oracle::random_histogram(rng));
    const auto a = build_code(h);
    const auto b = build_code(h);
    EXPECT_EQ(a.table.lengths, b.table.lengths);
    EXPECT_EQ(a.table.codes, b.table.codes);
}

TEST(Canonicalize, SmallestCode) {
    CodeLengths l{};
    l['A'] = 1;
    l['B'] = 2;
    l['C'] = 2;
    const auto t = canonicalize(l);
    EXPECT_EQ(t.codes['A'], 0b0);
    EXPECT_EQ(t.codes['B'], 0b10);
    EXPECT_EQ(t.codes['C'], 0b11);
}

TEST(Canonicalize, LengthEightIsIdentity) {
    CodeLengths l;
    l.fill(8);
    const auto t = canonicalize(l);
    for (unsigned s = 0; s < 256; ++s) EXPECT_EQ(t.codes[s], s);
}

TEST(Canonicalize, RejectsKraftViolation) {
    CodeLengths l{};
    l[0] = 1;
    l[1] = 1;
    l[2] = 2;
    try {
        canonicalize(l);
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_STREQ(e.what(), "invalid lengths");
    }
    CodeLengths incomplete{};
    incomplete[0] = 2;
    incomplete[1] = 2;
    EXPECT_THROW(canonicalize(incomplete), InvalidArgument);
}

TEST(Canonicalize, PrefixFreeAndConsecutive) {
    std::mt19937_64 rng(29);
    for (int i = 0; i < 200; ++i) {
        const auto t = build_code(to_hist(oracle::random_histogram(rng))).table;
        for (std::size_t a = 0; a < kAlphabet; ++a) {
            if (!t.lengths[a]) continue;
            for (std::size_t b = 0; b < kAlphabet; ++b) {
                if (a == b || !t.lengths[b] || t.lengths[b] < t.lengths[a]) continue;
                const unsigned shift = t.lengths[b] - t.lengths[a];
                ASSERT_NE(t.codes[b] >> shift, t.codes[a]) << a << " prefixes " << b;
                if (t.lengths[a] == t.lengths[b] && b > a) {
                    ASSERT_GT(t.codes[b], t.codes[a]);
                }
            }
        }
    }
}

TEST(HuffmanCoding, RoundTripAllSymbols) {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 200; ++i) {
        Histogram h;
        h.fill(0);
        const auto th = oracle::random_histogram(rng);
        std::copy(th.begin(), th.end(), h.begin());
        for (auto& c : h) c += 1; // every symbol present
        const auto code = build_code(h);
        std::vector<std::uint8_t> all(256);
        for (int s = 0; s < 256; ++s) all[s] = static_cast<std::uint8_t>(s);
        const auto bits = encode(all, code.table);
        EXPECT_EQ(decode(bits, code.table.lengths, all.size()), all);
    }
}

TEST(HuffmanCoding, EmptyInput) {
    CodeLengths l;
    l.fill(8);
    const auto t = canonicalize(l);
    EXPECT_TRUE(encode({}, t).empty());
    EXPECT_TRUE(decode({}, l, 0).empty());
}

TEST(HuffmanCoding, FourBitsPackIntoOneByte) {
    CodeLengths l{};
    l['A'] = 1;
    l['B'] = 1;
    const auto t = canonicalize(l);
    const std::vector<std::uint8_t> in = {'A', 'A', 'A', 'A'};
    const auto bits = encode(in, t);
    ASSERT_EQ(bits.size(), 1u);
    EXPECT_EQ(bits[0], 0x00);
    EXPECT_EQ(decode(bits, l, 4), in);
}

TEST(HuffmanCoding, MsbFirst) {
    CodeLengths l{};
    l['A'] = 1;
    l['B'] = 1;
    const auto bits = encode(std::vector<std::uint8_t>{'B', 'A', 'B'}, canonicalize(l));
    ASSERT_EQ(bits.size(), 1u);
    EXPECT_EQ(bits[0], 0b1010'0000);
}

TEST(HuffmanCoding, SymbolNotInCode) {
    CodeLengths l{};
    l['A'] = 1;
    l['B'] = 1;
    try {
        encode(std::vector<std::uint8_t>{'C'}, canonicalize(l));
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_STREQ(e.what(), "symbol not in code");
    }
}

TEST(HuffmanCoding, TruncatedStream) {
    CodeLengths l;
    l.fill(8);
    const std::vector<std::uint8_t> one = {0x41};
    EXPECT_THROW(decode(one, l, 2), CorruptStream);
}

TEST(HuffmanCoding, EntropyBracket) {
    // i.i.d. geometric source: bits/symbol within [H, H + 1].
    std::mt19937_64 rng(37);
    std::geometric_distribution<int> g(0.2);
    std::vector<std::uint8_t> data(1 << 16);
    for (auto& b : data) b = static_cast<std::uint8_t>(std::min(g(rng), 255));
    const auto h = histogram(data);
    double entropy = 0;
    for (auto c : h) {
        if (!c) continue;
        const double p = double(c) / double(data.size());
        entropy -= p * std::log2(p);
    }
    const auto code = build_code(h);
    const double bps = double(coded_bits(h, code.table.lengths)) / double(data.size());
    EXPECT_GE(bps, entropy);
    EXPECT_LE(bps, entropy + 1.0);
}

TEST(LengthHeader, AllEights) {
    CodeLengths l;
    l.fill(8);
    const auto bytes = serialize_lengths(l);
    for (auto b : bytes) EXPECT_EQ(b, 0x88);
}

TEST(LengthHeader, AllZero) {
    CodeLengths l{};
    const auto bytes = serialize_lengths(l);
    for (auto b : bytes) EXPECT_EQ(b, 0);
    EXPECT_EQ(deserialize_lengths(bytes), l);
}

TEST(LengthHeader, RejectsNibbleAboveEleven) {
    std::array<std::uint8_t, kLengthHeaderBytes> bytes{};
    bytes[10] = 0x0c;
    try {
        deserialize_lengths(bytes);
        FAIL();
    } catch (const CorruptStream& e) {
        EXPECT_STREQ(e.what(), "corrupt stream: invalid length header");
    }
}

TEST(LengthHeader, RoundTripRandomValid) {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 500; ++i) {
        const auto l = build_code(to_hist(oracle::random_histogram(rng))).table.lengths;
        EXPECT_EQ(deserialize_lengths(serialize_lengths(l)), l);
    }
}
