#pragma once

#include "dpz/error.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dpz {

/// MSB-first bit packer. The final byte is padded with zero bits.
class BitWriter {
public:
    /// Append the low `nbits` (<= 32) bits of `value`, most significant first.
    void put(std::uint32_t value, unsigned nbits) {
        if (nbits == 0) {
            return;
        }
        const std::uint64_t masked = nbits == 32 ? value : (value & ((1u << nbits) - 1));
        acc_ = (acc_ << nbits) | masked;
        used_ += nbits;
        bits_ += nbits;
        while (used_ >= 8) {
            used_ -= 8;
            out_.push_back(static_cast<std::uint8_t>(acc_ >> used_));
        }
        acc_ &= (std::uint64_t{1} << used_) - 1;
    }

    std::size_t bit_count() const { return bits_; }

    std::vector<std::uint8_t> finish() {
        if (used_ != 0) {
            out_.push_back(static_cast<std::uint8_t>(acc_ << (8 - used_)));
            acc_ = 0;
            used_ = 0;
        }
        return std::move(out_);
    }

private:
    std::vector<std::uint8_t> out_;
    std::uint64_t acc_ = 0;
    unsigned used_ = 0;
    std::size_t bits_ = 0;
};

/// MSB-first reader over a byte span.
class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::size_t remaining() const { return data_.size() * 8 - pos_; }
    std::size_t position() const { return pos_; }

    /// Next `nbits` (<= 32) bits without consuming them; bits past the end
    /// read as zero.
    std::uint32_t peek(unsigned nbits) const {
        if (nbits == 0) {
            return 0;
        }
        const std::size_t byte = pos_ >> 3;
        const unsigned shift = static_cast<unsigned>(pos_ & 7);
        std::uint64_t window = 0;
        for (std::size_t i = 0; i < 5; ++i) {
            window <<= 8;
            if (byte + i < data_.size()) {
                window |= data_[byte + i];
            }
        }
        // 40-bit window; drop the bits already consumed, keep `nbits`.
        return static_cast<std::uint32_t>((window >> (40 - shift - nbits)) &
                                          ((std::uint64_t{1} << nbits) - 1));
    }

    void skip(unsigned nbits) {
        if (nbits > remaining()) {
            throw CorruptStream("truncated bitstream");
        }
        pos_ += nbits;
    }

    std::uint32_t get(unsigned nbits) {
        const std::uint32_t v = peek(nbits);
        skip(nbits);
        return v;
    }

    /// True when only zero padding (< 8 bits) is left.
    bool only_padding_left() const {
        const std::size_t rest = remaining();
        return rest < 8 && peek(static_cast<unsigned>(rest)) == 0;
    }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

} // namespace dpz
