#include "dpz/lz77.hpp"

#include "dpz/error.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

namespace dpz::lz77 {

HashPair hash_pair(std::uint32_t word) {
    const auto h0 = static_cast<std::uint8_t>((word * 2654435761u) >> 24);
    const auto h1 = static_cast<std::uint8_t>(word ^ (word >> 8) ^ (word >> 16) ^ (word >> 24));
    return {h0, h1};
}

MatchTable::MatchTable() = default;

void MatchTable::insert(std::uint8_t bucket, std::uint16_t pos) {
    auto& cur = cursor_[bucket];
    slots_[bucket][cur] = pos;
    cur = static_cast<std::uint8_t>((cur + 1) % kSlots);
    if (fill_[bucket] < kSlots) {
        ++fill_[bucket];
    }
}

std::span<const std::uint16_t> MatchTable::candidates(
    std::uint8_t bucket, std::array<std::uint16_t, kSlots>& scratch) const {
    const std::size_t n = fill_[bucket];
    // Oldest entry sits at the write cursor once the bucket has wrapped.
    const std::size_t start = n < kSlots ? 0 : cursor_[bucket];
    for (std::size_t i = 0; i < n; ++i) {
        scratch[i] = slots_[bucket][(start + i) % kSlots];
    }
    return {scratch.data(), n};
}

namespace {

std::size_t match_length(std::span<const std::uint8_t> block, std::size_t cand,
                         std::size_t pos) {
    std::size_t len = 0;
    const std::size_t limit = block.size() - pos;
    if constexpr (std::endian::native == std::endian::little) {
        while (len + 8 <= limit) {
            std::uint64_t a, b;
            std::memcpy(&a, block.data() + cand + len, 8);
            std::memcpy(&b, block.data() + pos + len, 8);
            if (a != b) {
                return len + static_cast<std::size_t>(std::countr_zero(a ^ b)) / 8;
            }
            len += 8;
        }
    }
    while (len < limit && block[cand + len] == block[pos + len]) {
        ++len;
    }
    return len;
}

struct Candidate {
    std::size_t pos = 0;
    std::size_t len = 0;
    std::size_t offset = 0;
};

// First-fit over both buckets: h0 before h1, oldest entry first.
bool probe(const MatchTable& table, std::span<const std::uint8_t> block, std::size_t pos,
           Candidate& out) {
    const std::uint32_t word = load_word(block.data() + pos);
    const HashPair h = hash_pair(word);
    std::array<std::uint16_t, kSlots> scratch{};
    const std::uint8_t buckets[2] = {h.h0, h.h1};
    const int nbuckets = h.h0 == h.h1 ? 1 : 2;
    for (int b = 0; b < nbuckets; ++b) {
        for (std::uint16_t cand : table.candidates(buckets[b], scratch)) {
            if (cand >= pos || pos - cand > kMaxOffset || load_word(block.data() + cand) != word) {
                continue;
            }
            const std::size_t len = match_length(block, cand, pos);
            if (len >= kMinMatch) {
                out = {pos, len, pos - cand};
                return true;
            }
        }
    }
    return false;
}

} // namespace

TokenStream encode(std::span<const std::uint8_t> block) {
    if (block.empty()) {
        throw InvalidArgument("empty input");
    }
    if (block.size() > kMaxBlock) {
        throw InvalidArgument("block exceeds 4096 bytes");
    }

    TokenStream tokens;
    MatchTable table;
    const std::size_t n = block.size();
    std::size_t cursor = 0;
    std::size_t literal_start = 0;

    while (cursor + kMinMatch <= n) {
        const std::size_t group = cursor;
        Candidate hit;
        bool found = false;
        // The four lanes of a group are checked in order; the first lane
        // with a verified candidate wins.
        for (std::size_t lane = 0; lane < 4 && group + lane + kMinMatch <= n; ++lane) {
            if (probe(table, block, group + lane, hit)) {
                found = true;
                break;
            }
        }

        const HashPair h = hash_pair(load_word(block.data() + group));
        table.insert(h.h0, static_cast<std::uint16_t>(group));
        if (h.h1 != h.h0) {
            table.insert(h.h1, static_cast<std::uint16_t>(group));
        }

        if (!found) {
            cursor = group + 4;
            continue;
        }
        Token t;
        t.literals.assign(block.begin() + static_cast<std::ptrdiff_t>(literal_start),
                          block.begin() + static_cast<std::ptrdiff_t>(hit.pos));
        t.match_len = static_cast<std::uint32_t>(hit.len);
        t.offset = static_cast<std::uint32_t>(hit.offset);
        tokens.push_back(std::move(t));
        cursor = hit.pos + hit.len;
        literal_start = cursor;
    }

    if (literal_start < n) {
        Token t;
        t.literals.assign(block.begin() + static_cast<std::ptrdiff_t>(literal_start), block.end());
        tokens.push_back(std::move(t));
    }
    return tokens;
}

namespace {

// Register-backed window holding the last 256 output bytes.
class RecentBuffer {
public:
    static_assert((kRecentWindow & (kRecentWindow - 1)) == 0);
    void push(std::uint8_t b) {
        ring_[head_] = b;
        head_ = (head_ + 1) & (kRecentWindow - 1);
    }
    std::uint8_t at_offset(std::size_t offset) const {
        return ring_[(head_ - offset) & (kRecentWindow - 1)];
    }

private:
    std::array<std::uint8_t, kRecentWindow> ring_{};
    std::size_t head_ = 0;
};

} // namespace

std::vector<std::uint8_t> decode(const TokenStream& tokens, std::size_t expected_len,
                                 DecodeOptions opts) {
    std::vector<std::uint8_t> out(expected_len);
    std::size_t w = 0;
    RecentBuffer recent;

    for (const Token& t : tokens) {
        if (t.literals.size() > expected_len - w) {
            throw CorruptStream("length mismatch");
        }
        for (std::uint8_t b : t.literals) {
            out[w++] = b;
            recent.push(b);
        }
        if (t.match_len == 0) {
            continue;
        }
        if (t.offset == 0 || t.offset > w) {
            throw CorruptStream("offset out of range");
        }
        if (t.match_len > expected_len - w) {
            throw CorruptStream("length mismatch");
        }
        const std::size_t offset = t.offset;
        if (opts.recent_fast_path && offset <= kRecentWindow) {
            for (std::uint32_t i = 0; i < t.match_len; ++i) {
                const std::uint8_t b = recent.at_offset(offset);
                out[w++] = b;
                recent.push(b);
            }
        } else {
            for (std::uint32_t i = 0; i < t.match_len; ++i, ++w) {
                out[w] = out[w - offset];
                recent.push(out[w]);
            }
        }
    }

    if (w != expected_len) {
        throw CorruptStream("length mismatch");
    }
    return out;
}

std::size_t expanded_size(const TokenStream& tokens) {
    std::size_t total = 0;
    for (const Token& t : tokens) {
        total += t.literals.size() + t.match_len;
    }
    return total;
}

bool well_formed(const TokenStream& tokens, std::size_t block_len) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& t = tokens[i];
        pos += t.literals.size();
        if (t.match_len == 0) {
            if (i + 1 != tokens.size()) {
                return false;
            }
            continue;
        }
        if (t.match_len < kMinMatch || t.offset == 0 || t.offset > pos ||
            t.offset > kMaxOffset) {
            return false;
        }
        pos += t.match_len;
    }
    return pos == block_len;
}

} // namespace dpz::lz77
