#include "dpz/fse.hpp"

#include "dpz/bitio.hpp"
#include "dpz/error.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <utility>

namespace dpz::fse {

namespace {

unsigned highbit(std::uint32_t v) { return 31u - static_cast<unsigned>(std::countl_zero(v)); }

void check_table_log(unsigned table_log) {
    if (table_log < kMinTableLog || table_log > kMaxTableLog) {
        throw InvalidArgument("table_log out of range");
    }
}

} // namespace

NormalizedCounts normalize_counts(const Histogram& hist, unsigned table_log) {
    check_table_log(table_log);
    const std::uint64_t target = std::uint64_t{1} << table_log;
    const std::uint64_t total = std::accumulate(hist.begin(), hist.end(), std::uint64_t{0});
    const auto distinct =
        std::count_if(hist.begin(), hist.end(), [](std::uint64_t c) { return c != 0; });
    if (distinct < 2) {
        throw InvalidArgument("use RLE/raw path");
    }
    if (static_cast<std::uint64_t>(distinct) > target) {
        throw InvalidArgument("table_log too small for alphabet");
    }

    NormalizedCounts out;
    out.table_log = table_log;
    std::array<std::uint64_t, 256> remainder{};
    std::int64_t assigned = 0;
    for (std::size_t s = 0; s < 256; ++s) {
        if (hist[s] == 0) {
            continue;
        }
        // Scaled value hist[s] * target / total, split into floor and remainder.
        const unsigned __int128 scaled = static_cast<unsigned __int128>(hist[s]) * target;
        std::uint64_t fl = static_cast<std::uint64_t>(scaled / total);
        if (fl == 0) {
            fl = 1;
        } else {
            remainder[s] = static_cast<std::uint64_t>(scaled % total);
        }
        out.norm[s] = static_cast<std::uint16_t>(fl);
        assigned += static_cast<std::int64_t>(fl);
    }

    std::int64_t diff = static_cast<std::int64_t>(target) - assigned;
    if (diff > 0) {
        std::vector<std::size_t> order;
        for (std::size_t s = 0; s < 256; ++s) {
            if (remainder[s] != 0) {
                order.push_back(s);
            }
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
        for (std::size_t i = 0; diff > 0 && i < order.size(); ++i, --diff) {
            ++out.norm[order[i]];
        }
    }
    // Forced minimum weights can over-assign; pay it back from the heaviest.
    while (diff < 0) {
        const auto heaviest = static_cast<std::size_t>(
            std::max_element(out.norm.begin(), out.norm.end()) - out.norm.begin());
        const std::int64_t room = out.norm[heaviest] - 1;
        const std::int64_t take = std::min(room, -diff);
        out.norm[heaviest] = static_cast<std::uint16_t>(out.norm[heaviest] - take);
        diff += take;
    }
    return out;
}

FseTables::FseTables(const NormalizedCounts& counts)
    : counts_(counts), table_log_(counts.table_log) {
    check_table_log(table_log_);
    const std::uint32_t size = 1u << table_log_;
    const std::uint32_t sum = std::accumulate(counts.norm.begin(), counts.norm.end(), 0u);
    if (sum != size) {
        throw InvalidArgument("normalized counts do not sum to table size");
    }

    std::vector<std::uint8_t> spread(size);
    const std::uint32_t step = static_cast<std::uint32_t>(spread_step(size));
    const std::uint32_t mask = size - 1;
    std::uint32_t pos = 0;
    for (std::size_t s = 0; s < 256; ++s) {
        for (unsigned i = 0; i < counts.norm[s]; ++i) {
            spread[pos] = static_cast<std::uint8_t>(s);
            pos = (pos + step) & mask;
        }
    }

    std::array<std::uint32_t, 256> next{};
    for (std::size_t s = 0; s < 256; ++s) {
        next[s] = counts.norm[s];
    }
    decode_.resize(size);
    for (std::uint32_t u = 0; u < size; ++u) {
        const std::uint8_t s = spread[u];
        const std::uint32_t x = next[s]++;
        const unsigned nb = table_log_ - highbit(x);
        decode_[u] = {s, static_cast<std::uint8_t>(nb),
                      static_cast<std::uint16_t>((x << nb) - size)};
    }

    std::array<std::uint32_t, 257> cumul{};
    for (std::size_t s = 0; s < 256; ++s) {
        cumul[s + 1] = cumul[s] + counts.norm[s];
    }
    state_table_.resize(size);
    std::array<std::uint32_t, 256> fill = {};
    for (std::size_t s = 0; s < 256; ++s) {
        fill[s] = cumul[s];
    }
    for (std::uint32_t u = 0; u < size; ++u) {
        state_table_[fill[spread[u]]++] = static_cast<std::uint16_t>(size + u);
    }

    for (std::size_t s = 0; s < 256; ++s) {
        const std::uint32_t n = counts.norm[s];
        SymbolTransform& t = transform_[s];
        if (n == 0) {
            t = {0, 0};
        } else if (n == 1) {
            t.delta_nb_bits = (table_log_ << 16) - size;
            t.delta_find_state = static_cast<std::int32_t>(cumul[s]) - 1;
        } else {
            const unsigned max_bits_out = table_log_ - highbit(n - 1);
            const std::uint32_t min_state_plus = n << max_bits_out;
            t.delta_nb_bits = (max_bits_out << 16) - min_state_plus;
            t.delta_find_state = static_cast<std::int32_t>(cumul[s]) - static_cast<std::int32_t>(n);
        }
    }
}

std::uint32_t FseTables::initial_state(std::uint8_t s) const {
    const SymbolTransform& t = transform_[s];
    const std::uint32_t nb = (t.delta_nb_bits + (1u << 15)) >> 16;
    const std::uint32_t value = (nb << 16) - t.delta_nb_bits;
    return state_table_[static_cast<std::size_t>(static_cast<std::int32_t>(value >> nb) +
                                                 t.delta_find_state)];
}

FseTables build_tables(const NormalizedCounts& counts) { return FseTables(counts); }

std::vector<std::uint8_t> encode(std::span<const std::uint8_t> bytes, const FseTables& tables) {
    for (std::uint8_t b : bytes) {
        if (!tables.in_support(b)) {
            throw InvalidArgument("symbol not in table");
        }
    }
    if (bytes.empty()) {
        return {};
    }

    std::vector<std::pair<std::uint32_t, std::uint8_t>> chunks;
    chunks.reserve(bytes.size());
    std::uint32_t state = tables.initial_state(bytes.back());
    for (std::size_t i = bytes.size() - 1; i-- > 0;) {
        const auto& t = tables.transform(bytes[i]);
        const std::uint32_t nb = (state + t.delta_nb_bits) >> 16;
        chunks.emplace_back(state & ((1u << nb) - 1), static_cast<std::uint8_t>(nb));
        state = tables.state_table()[static_cast<std::size_t>(
            static_cast<std::int32_t>(state >> nb) + t.delta_find_state)];
    }

    BitWriter w;
    w.put(state - static_cast<std::uint32_t>(tables.table_size()), tables.table_log());
    for (auto it = chunks.rbegin(); it != chunks.rend(); ++it) {
        w.put(it->first, it->second);
    }
    return w.finish();
}

std::vector<std::uint8_t> decode(std::span<const std::uint8_t> bits, const FseTables& tables,
                                 std::size_t n) {
    std::vector<std::uint8_t> out;
    if (n == 0) {
        if (!bits.empty()) {
            throw CorruptStream("trailing bits after fse stream");
        }
        return out;
    }
    out.reserve(n);
    BitReader r(bits);
    const auto& table = tables.decode_table();
    std::uint32_t state = r.get(tables.table_log());
    for (std::size_t i = 0;; ++i) {
        const auto& e = table[state];
        out.push_back(e.symbol);
        if (i + 1 == n) {
            break;
        }
        state = e.new_state + r.get(e.nb_bits);
    }
    const std::uint32_t expected =
        tables.initial_state(out.back()) - static_cast<std::uint32_t>(tables.table_size());
    if (state != expected) {
        throw CorruptStream("bad final fse state");
    }
    if (!r.only_padding_left()) {
        throw CorruptStream("trailing bits after fse stream");
    }
    return out;
}

std::vector<std::uint8_t> serialize_counts(const NormalizedCounts& counts) {
    BitWriter w;
    w.put(counts.table_log, 8);
    for (std::uint16_t v : counts.norm) {
        if (v > 0xfff) {
            throw InvalidArgument("weight does not fit 12 bits");
        }
        w.put(v, 12);
    }
    return w.finish();
}

NormalizedCounts deserialize_counts(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderBytes) {
        throw CorruptStream("truncated fse header");
    }
    BitReader r(bytes.first(kHeaderBytes));
    NormalizedCounts out;
    out.table_log = r.get(8);
    if (out.table_log < kMinTableLog || out.table_log > kMaxTableLog) {
        throw CorruptStream("invalid fse header");
    }
    std::uint32_t sum = 0;
    for (auto& v : out.norm) {
        v = static_cast<std::uint16_t>(r.get(12));
        sum += v;
    }
    if (sum != (1u << out.table_log)) {
        throw CorruptStream("invalid fse header");
    }
    return out;
}

} // namespace dpz::fse
