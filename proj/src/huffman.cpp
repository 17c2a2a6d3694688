#include "dpz/huffman.hpp"

#include "dpz/bitio.hpp"
#include "dpz/error.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace dpz::huffman {

Histogram histogram(std::span<const std::uint8_t> bytes) {
    Histogram h{};
    for (std::uint8_t b : bytes) {
        ++h[b];
    }
    return h;
}

CodeLengths build_lengths(const Histogram& hist) {
    std::vector<std::pair<std::uint64_t, unsigned>> leaves;
    for (unsigned s = 0; s < kAlphabet; ++s) {
        if (hist[s] != 0) {
            leaves.emplace_back(hist[s], s);
        }
    }
    if (leaves.empty()) {
        throw InvalidArgument("empty histogram");
    }
    CodeLengths out{};
    if (leaves.size() == 1) {
        out[leaves[0].second] = 1;
        return out;
    }
    std::sort(leaves.begin(), leaves.end());

    // Two-queue merge: leaves are pre-sorted and internal nodes are created in
    // nondecreasing weight order, so the two smallest are always at a head.
    const std::size_t n = leaves.size();
    std::vector<std::uint64_t> weight(2 * n - 1);
    std::vector<std::size_t> parent(2 * n - 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        weight[i] = leaves[i].first;
    }
    std::size_t next_leaf = 0;
    std::size_t next_internal = n;
    std::size_t created = n;
    auto pop_min = [&]() {
        if (next_leaf < n &&
            (next_internal >= created || weight[next_leaf] <= weight[next_internal])) {
            return next_leaf++;
        }
        return next_internal++;
    };
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t a = pop_min();
        const std::size_t b = pop_min();
        weight[created] = weight[a] + weight[b];
        parent[a] = created;
        parent[b] = created;
        ++created;
    }

    std::vector<unsigned> depth(2 * n - 1, 0);
    for (std::size_t i = 2 * n - 1; i-- > 0;) {
        if (i != 2 * n - 2) {
            depth[i] = depth[parent[i]] + 1;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        out[leaves[i].second] = static_cast<std::uint8_t>(depth[i]);
    }
    return out;
}

std::uint64_t kraft_sum(const CodeLengths& lengths, unsigned max_bits) {
    std::uint64_t sum = 0;
    for (std::uint8_t len : lengths) {
        if (len != 0 && len <= max_bits) {
            sum += std::uint64_t{1} << (max_bits - len);
        }
    }
    return sum;
}

namespace {

using Order = std::array<std::uint8_t, kAlphabet>;

// Symbol order, optionally stably sorted by weight (rarest first when
// `rarest_first`, most frequent first otherwise).
Order rank_order(const Histogram* weights, bool rarest_first) {
    Order order;
    std::iota(order.begin(), order.end(), 0);
    if (weights) {
        std::stable_sort(order.begin(), order.end(), [&](std::uint8_t a, std::uint8_t b) {
            return rarest_first ? (*weights)[a] < (*weights)[b] : (*weights)[a] > (*weights)[b];
        });
    }
    return order;
}

// Raise the Kraft sum by exactly 2^(max_bits - level): move the first leaf
// in `order` up from `level`, or, with no leaf there, the two nodes one
// level deeper.
void promote_node(CodeLengths& lengths, const Order& order, unsigned level, unsigned max_bits) {
    if (level > max_bits) {
        throw std::logic_error("hole repair found no node to promote");
    }
    if (level >= 2) {
        for (std::uint8_t s : order) {
            if (lengths[s] == level) {
                --lengths[s];
                return;
            }
        }
    }
    promote_node(lengths, order, level + 1, max_bits);
    promote_node(lengths, order, level + 1, max_bits);
}

} // namespace

CappedLengths cap_lengths(const CodeLengths& input, unsigned max_bits, const Histogram* weights) {
    if (max_bits == 0 || max_bits > 15) {
        throw InvalidArgument("max_bits out of range");
    }
    CappedLengths result;
    CodeLengths& lengths = result.lengths;
    CanonizationTrace& trace = result.trace;
    const std::int64_t full = std::int64_t{1} << max_bits;

    // Stage 1: clip and tally.
    std::int64_t kraft = 0;
    for (std::size_t s = 0; s < kAlphabet; ++s) {
        std::uint8_t len = input[s];
        ++trace.scan_cycles;
        if (len == 0) {
            continue;
        }
        if (len > max_bits) {
            len = static_cast<std::uint8_t>(max_bits);
        }
        lengths[s] = len;
        ++trace.n_leaves;
        kraft += std::int64_t{1} << (max_bits - len);
    }
    if (trace.n_leaves == 0) {
        throw InvalidArgument("empty histogram");
    }
    if (trace.n_leaves > static_cast<unsigned>(full)) {
        throw InvalidArgument("cap infeasible");
    }
    if (trace.n_leaves == 1) {
        for (auto& len : lengths) {
            if (len != 0) {
                len = 1;
            }
        }
        return result;
    }
    std::int64_t k = kraft - full;
    trace.deficit = k;
    const Order demote_order = rank_order(weights, true);

    // Stage 2: demote (len + 1) at levels max-1 .. 1; a demotion at level L
    // frees 2^(max - L - 1) slots.
    for (unsigned level = max_bits - 1; level >= 1 && k > 0; --level) {
        ++trace.redistribute_cycles;
        const unsigned shift = max_bits - level - 1;
        const std::int64_t gain = std::int64_t{1} << shift;
        std::int64_t need = (k + gain - 1) >> shift;
        for (std::size_t i = 0; i < kAlphabet && need > 0; ++i) {
            const std::uint8_t s = demote_order[i];
            if (lengths[s] == level) {
                ++lengths[s];
                k -= gain;
                --need;
            }
        }
    }

    // Stage 3: k <= 0 now; fill |k| holes one bit per iteration, deepest
    // level first, halving the residual each time.
    const Order promote_order = rank_order(weights, false);
    std::int64_t holes = -k;
    for (unsigned level = max_bits; holes > 0; --level) {
        ++trace.repair_cycles;
        if (holes & 1) {
            promote_node(lengths, promote_order, level, max_bits);
        }
        holes >>= 1;
    }

    if (kraft_sum(lengths, max_bits) != static_cast<std::uint64_t>(full)) {
        throw std::logic_error("cap_lengths left an incomplete code");
    }
    return result;
}

namespace {

unsigned used_count(const CodeLengths& lengths) {
    return static_cast<unsigned>(
        std::count_if(lengths.begin(), lengths.end(), [](std::uint8_t l) { return l != 0; }));
}

bool valid_lengths(const CodeLengths& lengths) {
    for (std::uint8_t len : lengths) {
        if (len > kMaxBits) {
            return false;
        }
    }
    const unsigned used = used_count(lengths);
    if (used == 0) {
        return false;
    }
    if (used == 1) {
        return kraft_sum(lengths) == (1u << (kMaxBits - 1));
    }
    return kraft_sum(lengths) == (1u << kMaxBits);
}

} // namespace

CanonicalCodeTable canonicalize(const CodeLengths& lengths) {
    if (!valid_lengths(lengths)) {
        throw InvalidArgument("invalid lengths");
    }
    CanonicalCodeTable table;
    table.lengths = lengths;

    std::array<unsigned, kMaxBits + 1> count{};
    for (std::uint8_t len : lengths) {
        if (len != 0) {
            ++count[len];
        }
    }
    std::array<unsigned, kMaxBits + 2> next{};
    unsigned code = 0;
    for (unsigned len = 1; len <= kMaxBits; ++len) {
        code = (code + count[len - 1]) << 1;
        next[len] = code;
    }
    for (std::size_t s = 0; s < kAlphabet; ++s) {
        const std::uint8_t len = lengths[s];
        if (len != 0) {
            table.codes[s] = static_cast<std::uint16_t>(next[len]++);
        }
    }
    return table;
}

BuiltCode build_code(const Histogram& hist) {
    const CappedLengths capped = cap_lengths(build_lengths(hist));
    return {canonicalize(capped.lengths), capped.trace};
}

std::vector<std::uint8_t> encode(std::span<const std::uint8_t> bytes,
                                 const CanonicalCodeTable& table) {
    BitWriter w;
    for (std::uint8_t b : bytes) {
        const unsigned len = table.lengths[b];
        if (len == 0) {
            throw InvalidArgument("symbol not in code");
        }
        w.put(table.codes[b], len);
    }
    return w.finish();
}

std::vector<std::uint8_t> decode(std::span<const std::uint8_t> bits, const CodeLengths& lengths,
                                 std::size_t n) {
    const CanonicalCodeTable table = canonicalize(lengths);

    // Flat lookup on the next 11 bits: (symbol, length); length 0 marks a
    // prefix no code word starts with.
    struct Entry {
        std::uint8_t symbol = 0;
        std::uint8_t len = 0;
    };
    std::vector<Entry> lut(std::size_t{1} << kMaxBits);
    for (std::size_t s = 0; s < kAlphabet; ++s) {
        const unsigned len = table.lengths[s];
        if (len == 0) {
            continue;
        }
        const std::size_t first = std::size_t{table.codes[s]} << (kMaxBits - len);
        const std::size_t span = std::size_t{1} << (kMaxBits - len);
        for (std::size_t i = 0; i < span; ++i) {
            lut[first + i] = {static_cast<std::uint8_t>(s), static_cast<std::uint8_t>(len)};
        }
    }

    std::vector<std::uint8_t> out;
    out.reserve(n);
    BitReader r(bits);
    for (std::size_t i = 0; i < n; ++i) {
        const Entry e = lut[r.peek(kMaxBits)];
        if (e.len == 0) {
            throw CorruptStream("invalid huffman code");
        }
        r.skip(e.len);
        out.push_back(e.symbol);
    }
    if (!r.only_padding_left()) {
        throw CorruptStream("trailing bits after huffman stream");
    }
    return out;
}

std::array<std::uint8_t, kLengthHeaderBytes> serialize_lengths(const CodeLengths& lengths) {
    std::array<std::uint8_t, kLengthHeaderBytes> out{};
    for (std::size_t i = 0; i < kLengthHeaderBytes; ++i) {
        const std::uint8_t hi = lengths[2 * i];
        const std::uint8_t lo = lengths[2 * i + 1];
        if (hi > 15 || lo > 15) {
            throw InvalidArgument("length does not fit the 4-bit header");
        }
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

CodeLengths deserialize_lengths(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kLengthHeaderBytes) {
        throw CorruptStream("truncated length header");
    }
    CodeLengths out{};
    for (std::size_t i = 0; i < kLengthHeaderBytes; ++i) {
        const std::uint8_t hi = bytes[i] >> 4;
        const std::uint8_t lo = bytes[i] & 0x0f;
        if (hi > kMaxBits || lo > kMaxBits) {
            throw CorruptStream("invalid length header");
        }
        out[2 * i] = hi;
        out[2 * i + 1] = lo;
    }
    return out;
}

std::uint64_t coded_bits(const Histogram& hist, const CodeLengths& lengths) {
    std::uint64_t bits = 0;
    for (std::size_t s = 0; s < kAlphabet; ++s) {
        bits += hist[s] * lengths[s];
    }
    return bits;
}

} // namespace dpz::huffman
