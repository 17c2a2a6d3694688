#pragma once

// Plain page-mapped FTL with greedy garbage collection, no compression.
// Used as a reference for write amplification of the compressed simulator
// when every page is stored raw.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

namespace dpz::oracle {

class PageFtl {
public:
    PageFtl(std::size_t blocks, std::size_t pages_per_block, std::size_t lpns, std::size_t reserve)
        : ppb_(pages_per_block), reserve_(reserve), valid_(blocks, 0), owner_(blocks * pages_per_block, -1),
          closed_(blocks, false), l2p_(lpns, -1) {
        for (std::size_t b = 0; b < blocks; ++b) free_.push_back(b);
    }

    void write(std::size_t lpn) {
        ++host_;
        if (!room()) {
            close();
            while (free_.size() <= reserve_) collect();
            if (!room()) {
                close();
                open(free_.front());
                free_.pop_front();
            }
        }
        put(lpn);
    }

    std::uint64_t host_pages() const { return host_; }
    std::uint64_t programmed_pages() const { return programmed_; }

private:
    bool room() const { return open_ && ptr_ < ppb_; }

    void open(std::size_t b) {
        open_ = b;
        ptr_ = 0;
    }

    void close() {
        if (open_) closed_[*open_] = true;
        open_.reset();
    }

    void put(std::size_t lpn) {
        if (l2p_[lpn] >= 0) {
            const auto old = static_cast<std::size_t>(l2p_[lpn]);
            owner_[old] = -1;
            --valid_[old / ppb_];
        }
        const std::size_t ppn = *open_ * ppb_ + ptr_++;
        owner_[ppn] = static_cast<long>(lpn);
        l2p_[lpn] = static_cast<long>(ppn);
        ++valid_[*open_];
        ++programmed_;
        if (ptr_ == ppb_) close();
    }

    void collect() {
        std::optional<std::size_t> victim;
        for (std::size_t b = 0; b < valid_.size(); ++b) {
            if (!closed_[b] || valid_[b] == ppb_) continue;
            if (!victim || valid_[b] < valid_[*victim]) victim = b;
        }
        const std::size_t v = *victim;
        for (std::size_t p = v * ppb_; p < (v + 1) * ppb_; ++p) {
            if (owner_[p] < 0) continue;
            if (!room()) {
                close();
                open(free_.front());
                free_.pop_front();
            }
            put(static_cast<std::size_t>(owner_[p]));
        }
        closed_[v] = false;
        free_.push_back(v);
    }

    std::size_t ppb_;
    std::size_t reserve_;
    std::vector<std::size_t> valid_;
    std::vector<long> owner_;
    std::vector<bool> closed_;
    std::vector<long> l2p_;
    std::deque<std::size_t> free_;
    std::optional<std::size_t> open_;
    std::size_t ptr_ = 0;
    std::uint64_t host_ = 0;
    std::uint64_t programmed_ = 0;
};

} // namespace dpz::oracle
