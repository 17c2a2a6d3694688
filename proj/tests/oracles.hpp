#pragma once

// Reference implementations used only by tests. None of these share code
// with the library paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <random>
#include <span>
#include <vector>

namespace dpz::oracle {

using Hist = std::vector<std::uint64_t>; // 256 entries

/// Textbook Huffman with a priority queue; returns per-symbol depth.
inline std::vector<unsigned> textbook_huffman_depths(const Hist& hist) {
    struct Node {
        std::uint64_t w;
        int id;
    };
    auto cmp = [](const Node& a, const Node& b) {
        return a.w != b.w ? a.w > b.w : a.id > b.id;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(cmp)> pq(cmp);
    std::vector<int> parent;
    std::vector<int> sym_node(hist.size(), -1);
    for (std::size_t s = 0; s < hist.size(); ++s) {
        if (hist[s] != 0) {
            sym_node[s] = static_cast<int>(parent.size());
            pq.push({hist[s], static_cast<int>(parent.size())});
            parent.push_back(-1);
        }
    }
    std::vector<unsigned> depth(hist.size(), 0);
    if (parent.size() == 1) {
        for (std::size_t s = 0; s < hist.size(); ++s) {
            if (sym_node[s] >= 0) depth[s] = 1;
        }
        return depth;
    }
    while (pq.size() > 1) {
        Node a = pq.top();
        pq.pop();
        Node b = pq.top();
        pq.pop();
        const int id = static_cast<int>(parent.size());
        parent.push_back(-1);
        parent[a.id] = id;
        parent[b.id] = id;
        pq.push({a.w + b.w, id});
    }
    for (std::size_t s = 0; s < hist.size(); ++s) {
        if (sym_node[s] < 0) continue;
        unsigned d = 0;
        for (int n = sym_node[s]; parent[n] >= 0; n = parent[n]) ++d;
        depth[s] = d;
    }
    return depth;
}

/// Package-merge: optimal code lengths subject to len <= max_bits.
inline std::vector<unsigned> package_merge_lengths(const Hist& hist, unsigned max_bits) {
    std::vector<std::size_t> syms;
    for (std::size_t s = 0; s < hist.size(); ++s) {
        if (hist[s] != 0) syms.push_back(s);
    }
    std::vector<unsigned> out(hist.size(), 0);
    const std::size_t n = syms.size();
    if (n == 1) {
        out[syms[0]] = 1;
        return out;
    }
    std::sort(syms.begin(), syms.end(),
              [&](std::size_t a, std::size_t b) { return hist[a] < hist[b]; });

    struct Item {
        std::uint64_t w;
        std::vector<std::uint8_t> uses; // per sorted-symbol index
    };
    std::vector<Item> leaves;
    for (std::size_t i = 0; i < n; ++i) {
        Item it{hist[syms[i]], std::vector<std::uint8_t>(n, 0)};
        it.uses[i] = 1;
        leaves.push_back(std::move(it));
    }
    std::vector<Item> list = leaves;
    for (unsigned level = 1; level < max_bits; ++level) {
        std::vector<Item> packages;
        for (std::size_t i = 0; i + 1 < list.size(); i += 2) {
            Item p{list[i].w + list[i + 1].w, list[i].uses};
            for (std::size_t k = 0; k < n; ++k) p.uses[k] += list[i + 1].uses[k];
            packages.push_back(std::move(p));
        }
        std::vector<Item> merged;
        std::merge(leaves.begin(), leaves.end(), packages.begin(), packages.end(),
                   std::back_inserter(merged),
                   [](const Item& a, const Item& b) { return a.w < b.w; });
        list = std::move(merged);
    }
    for (std::size_t i = 0; i < 2 * n - 2; ++i) {
        for (std::size_t k = 0; k < n; ++k) out[syms[k]] += list[i].uses[k];
    }
    return out;
}

inline std::uint64_t code_cost(const Hist& hist, const std::vector<unsigned>& lengths) {
    std::uint64_t c = 0;
    for (std::size_t s = 0; s < hist.size(); ++s) c += hist[s] * lengths[s];
    return c;
}

/// Mix of shapes: flat, geometric, Zipf, sparse, spiky. Many of the skewed
/// ones need codes deeper than 11 bits.
inline Hist random_histogram(std::mt19937_64& rng) {
    Hist h(256, 0);
    std::uniform_int_distribution<int> shape_pick(0, 4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::size_t> perm(256);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::size_t used = 2 + static_cast<std::size_t>(u(rng) * 254);
    switch (shape_pick(rng)) {
    case 0:
        for (std::size_t i = 0; i < used; ++i) h[perm[i]] = 1 + static_cast<std::uint64_t>(u(rng) * 1000);
        break;
    case 1: {
        const double r = 0.5 + 0.45 * u(rng);
        double w = 1e9;
        for (std::size_t i = 0; i < used; ++i, w *= r) h[perm[i]] = 1 + static_cast<std::uint64_t>(w);
        break;
    }
    case 2: {
        const double alpha = 0.5 + 2.5 * u(rng);
        for (std::size_t i = 0; i < used; ++i)
            h[perm[i]] = 1 + static_cast<std::uint64_t>(1e7 / std::pow(double(i + 1), alpha));
        break;
    }
    case 3:
        for (std::size_t i = 0; i < used; ++i) h[perm[i]] = 1;
        h[perm[0]] = 1 + static_cast<std::uint64_t>(u(rng) * 1e8);
        break;
    default:
        for (std::size_t i = 0; i < used; ++i)
            h[perm[i]] = 1 + static_cast<std::uint64_t>(std::exp(u(rng) * 20.0));
        break;
    }
    return h;
}

/// Byte histogram of one 4KB page drawn from a random_histogram shape; the
/// counts the literal coder actually sees.
inline Hist page_histogram(std::mt19937_64& rng) {
    const Hist shape = random_histogram(rng);
    std::discrete_distribution<std::size_t> draw(shape.begin(), shape.end());
    Hist h(256, 0);
    for (int i = 0; i < 4096; ++i) ++h[draw(rng)];
    if (std::count_if(h.begin(), h.end(), [](std::uint64_t c) { return c != 0; }) < 2) ++h[h[0] ? 1 : 0];
    return h;
}

/// Greedy longest-match reference with unbounded search (O(n^2)).
struct RefToken {
    std::size_t literal_len;
    std::size_t match_len;
    std::size_t offset;
};

inline std::vector<RefToken> brute_force_lz(std::span<const std::uint8_t> in, std::size_t min_match) {
    std::vector<RefToken> out;
    std::size_t pos = 0, lit = 0;
    while (pos < in.size()) {
        std::size_t best_len = 0, best_off = 0;
        for (std::size_t c = 0; c < pos; ++c) {
            std::size_t l = 0;
            while (pos + l < in.size() && in[c + l] == in[pos + l]) ++l;
            if (l > best_len || (l == best_len && l > 0 && pos - c < best_off)) {
                best_len = l;
                best_off = pos - c;
            }
        }
        if (best_len >= min_match) {
            out.push_back({lit, best_len, best_off});
            pos += best_len;
            lit = 0;
        } else {
            ++pos;
            ++lit;
        }
    }
    if (lit != 0) out.push_back({lit, 0, 0});
    return out;
}

/// Independent expander for RefToken-shaped sequences over given literals.
inline std::vector<std::uint8_t> reference_expand(std::span<const std::uint8_t> original,
                                                  const std::vector<RefToken>& toks) {
    std::vector<std::uint8_t> out;
    std::size_t src = 0;
    for (const auto& t : toks) {
        for (std::size_t i = 0; i < t.literal_len; ++i) out.push_back(original[src + i]);
        src += t.literal_len;
        for (std::size_t i = 0; i < t.match_len; ++i) out.push_back(out[out.size() - t.offset]);
        src += t.match_len;
    }
    return out;
}

/// Bytes with a tunable mix of text-like runs, repeats and noise.
inline std::vector<std::uint8_t> mixed_entropy_bytes(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::uint8_t> out;
    out.reserve(n);
    std::uniform_int_distribution<int> kind(0, 3);
    std::uniform_int_distribution<int> byte(0, 255);
    std::uniform_int_distribution<std::size_t> run(1, 200);
    static const char* words[] = {"the ", "storage ", "flash ", "page ", "block ", "engine ",
                                  "compress ", "data ", "of ", "and ", "table ", "hash "};
    while (out.size() < n) {
        const std::size_t len = std::min(run(rng), n - out.size());
        switch (kind(rng)) {
        case 0:
            for (std::size_t i = 0; i < len; ++i) out.push_back(static_cast<std::uint8_t>(byte(rng)));
            break;
        case 1: {
            const auto b = static_cast<std::uint8_t>(byte(rng));
            out.insert(out.end(), len, b);
            break;
        }
        case 2:
            for (std::size_t i = 0; i < len;) {
                const char* w = words[static_cast<std::size_t>(byte(rng)) % 12];
                for (; *w && i < len; ++w, ++i) out.push_back(static_cast<std::uint8_t>(*w));
            }
            break;
        default:
            if (out.size() > 16) {
                const std::size_t from =
                    std::uniform_int_distribution<std::size_t>(0, out.size() - 1)(rng);
                for (std::size_t i = 0; i < len; ++i) out.push_back(out[from + (i % (out.size() - from))]);
            } else {
                out.insert(out.end(), len, 'x');
            }
            break;
        }
    }
    out.resize(n);
    return out;
}

} // namespace dpz::oracle
