#include "dpz/format.hpp"

#include "dpz/error.hpp"
#include "dpz/fse.hpp"
#include "dpz/lz77.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <future>
#include <istream>
#include <ostream>

namespace dpz::format {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'D', 'P', 'Z', '1'};

void put_varint(std::vector<std::uint8_t>& out, std::uint32_t v) {
    while (v >= 0x80) {
        out.push_back(static_cast<std::uint8_t>(v | 0x80));
        v >>= 7;
    }
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_varint(std::span<const std::uint8_t> in, std::size_t& pos) {
    std::uint64_t v = 0;
    for (unsigned shift = 0; shift < 35; shift += 7) {
        if (pos >= in.size()) {
            throw CorruptStream("truncated sequence section");
        }
        const std::uint8_t b = in[pos++];
        v |= std::uint64_t{b & 0x7fu} << shift;
        if ((b & 0x80) == 0) {
            if (v > 0xffffffffu) {
                break;
            }
            return static_cast<std::uint32_t>(v);
        }
    }
    throw CorruptStream("bad varint");
}

void put_le(std::vector<std::uint8_t>& out, std::uint32_t v, std::size_t width) {
    for (std::size_t i = 0; i < width; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint32_t get_le(std::span<const std::uint8_t> in, std::size_t pos, std::size_t width) {
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < width; ++i) {
        v |= std::uint32_t{in[pos + i]} << (8 * i);
    }
    return v;
}

std::size_t length_width(unsigned chunk_log) { return chunk_log > 12 ? 3 : 2; }

void check_chunk_log(unsigned chunk_log) {
    if (chunk_log < kMinChunkLog || chunk_log > kMaxChunkLog) {
        throw InvalidArgument("chunk_log must be within 12..16");
    }
}

struct Sequences {
    lz77::TokenStream tokens;
    std::size_t literal_count = 0;
};

// Sequence section: varint token count, then per token one descriptor byte
// (high nibble literal length, low nibble match code; 15 = continues in a
// varint), the varint extensions, and for matches the varint offset. The
// match code is 0 for "no match" (final token only), else match_len - 3.
void put_nibble_field(std::vector<std::uint8_t>& out, std::uint32_t v) {
    if (v >= 15) {
        put_varint(out, v - 15);
    }
}

void write_sequences(std::vector<std::uint8_t>& out, const lz77::TokenStream& tokens) {
    put_varint(out, static_cast<std::uint32_t>(tokens.size()));
    for (const auto& t : tokens) {
        const auto ll = static_cast<std::uint32_t>(t.literal_len());
        const std::uint32_t mc = t.match_len == 0 ? 0 : t.match_len - (lz77::kMinMatch - 1);
        out.push_back(static_cast<std::uint8_t>((std::min(ll, 15u) << 4) | std::min(mc, 15u)));
        put_nibble_field(out, ll);
        put_nibble_field(out, mc);
        if (t.match_len != 0) {
            put_varint(out, t.offset);
        }
    }
}

// Reads token shapes; literal vectors are sized but left unfilled.
Sequences read_sequences(std::span<const std::uint8_t> in, std::size_t& pos,
                         std::size_t orig_len) {
    Sequences seq;
    const std::uint32_t count = get_varint(in, pos);
    if (count > orig_len) {
        throw CorruptStream("token count exceeds page");
    }
    seq.tokens.resize(count);
    std::size_t produced = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        auto& t = seq.tokens[i];
        if (pos >= in.size()) {
            throw CorruptStream("truncated sequence section");
        }
        const std::uint8_t desc = in[pos++];
        std::uint32_t ll = desc >> 4;
        std::uint32_t mc = desc & 0x0f;
        if (ll == 15) {
            ll += get_varint(in, pos);
        }
        if (mc == 15) {
            mc += get_varint(in, pos);
        }
        if (ll > orig_len || mc > orig_len) {
            throw CorruptStream("length mismatch");
        }
        if (mc != 0) {
            t.match_len = mc + static_cast<std::uint32_t>(lz77::kMinMatch - 1);
            t.offset = get_varint(in, pos);
        } else if (i + 1 != count) {
            throw CorruptStream("empty match before final token");
        }
        if (ll > orig_len - produced) {
            throw CorruptStream("length mismatch");
        }
        produced += ll;
        if (t.match_len > orig_len - produced) {
            throw CorruptStream("length mismatch");
        }
        produced += t.match_len;
        t.literals.resize(ll);
        seq.literal_count += ll;
    }
    return seq;
}

std::vector<std::uint8_t> gather_literals(const lz77::TokenStream& tokens) {
    std::vector<std::uint8_t> lits;
    for (const auto& t : tokens) {
        lits.insert(lits.end(), t.literals.begin(), t.literals.end());
    }
    return lits;
}

void scatter_literals(lz77::TokenStream& tokens, std::span<const std::uint8_t> lits) {
    std::size_t p = 0;
    for (auto& t : tokens) {
        std::copy_n(lits.begin() + static_cast<std::ptrdiff_t>(p), t.literals.size(),
                    t.literals.begin());
        p += t.literals.size();
    }
}

std::size_t distinct_symbols(const huffman::Histogram& h) {
    return static_cast<std::size_t>(
        std::count_if(h.begin(), h.end(), [](std::uint64_t c) { return c != 0; }));
}

} // namespace

std::string_view mode_name(Mode m) {
    switch (m) {
    case Mode::Raw: return "RAW";
    case Mode::LzHuf: return "LZ_HUF";
    case Mode::LzFse: return "LZ_FSE";
    case Mode::LzOnly: return "LZ_ONLY";
    }
    return "?";
}

std::optional<Policy> parse_policy(std::string_view name) {
    if (name == "auto") return Policy::Auto;
    if (name == "raw") return Policy::Raw;
    if (name == "huf") return Policy::Huf;
    if (name == "fse") return Policy::Fse;
    if (name == "lz") return Policy::Lz;
    return std::nullopt;
}

std::string_view policy_name(Policy p) {
    switch (p) {
    case Policy::Auto: return "auto";
    case Policy::Raw: return "raw";
    case Policy::Huf: return "huf";
    case Policy::Fse: return "fse";
    case Policy::Lz: return "lz";
    }
    return "?";
}

std::size_t record_header_size(unsigned chunk_log) { return 1 + 2 * length_width(chunk_log); }

namespace {

std::vector<std::uint8_t> encode_tokens(std::size_t page_len, const lz77::TokenStream& tokens,
                                        const std::vector<std::uint8_t>& lits,
                                        const huffman::Histogram& hist, Mode mode,
                                        unsigned fse_table_log, PageStats* stats) {

    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> coded;
    huffman::CanonizationTrace trace;
    switch (mode) {
    case Mode::LzHuf: {
        const huffman::BuiltCode code = huffman::build_code(hist);
        trace = code.trace;
        const auto header = huffman::serialize_lengths(code.table.lengths);
        out.insert(out.end(), header.begin(), header.end());
        coded = huffman::encode(lits, code.table);
        break;
    }
    case Mode::LzFse: {
        const fse::NormalizedCounts norm = fse::normalize_counts(hist, fse_table_log);
        const auto header = fse::serialize_counts(norm);
        out.insert(out.end(), header.begin(), header.end());
        coded = fse::encode(lits, fse::build_tables(norm));
        break;
    }
    case Mode::LzOnly:
        coded = lits;
        break;
    case Mode::Raw:
        break;
    }
    write_sequences(out, tokens);
    out.insert(out.end(), coded.begin(), coded.end());

    if (stats != nullptr) {
        stats->orig_len = page_len;
        stats->mode = mode;
        stats->tokens = tokens.size();
        stats->literals = lits.size();
        stats->literal_bytes_coded = coded.size();
        stats->trace = trace;
    }
    return out;
}

} // namespace

std::vector<std::uint8_t> encode_page(std::span<const std::uint8_t> page, Mode mode,
                                      unsigned fse_table_log, PageStats* stats) {
    if (page.empty() || page.size() > kPageSize) {
        throw InvalidArgument("page must hold 1..4096 bytes");
    }
    if (mode == Mode::Raw) {
        if (stats != nullptr) {
            *stats = PageStats{page.size(), Mode::Raw, 0, 0, 0, {}};
        }
        return {page.begin(), page.end()};
    }
    const lz77::TokenStream tokens = lz77::encode(page);
    const std::vector<std::uint8_t> lits = gather_literals(tokens);
    return encode_tokens(page.size(), tokens, lits, huffman::histogram(lits), mode, fse_table_log,
                         stats);
}

std::vector<std::uint8_t> decode_page(std::span<const std::uint8_t> payload, Mode mode,
                                      std::size_t orig_len) {
    if (mode == Mode::Raw) {
        if (payload.size() != orig_len) {
            throw CorruptStream("raw length mismatch");
        }
        return {payload.begin(), payload.end()};
    }
    std::size_t pos = 0;
    std::optional<huffman::CodeLengths> lengths;
    std::optional<fse::NormalizedCounts> norm;
    if (mode == Mode::LzHuf) {
        lengths = huffman::deserialize_lengths(payload);
        pos = huffman::kLengthHeaderBytes;
    } else if (mode == Mode::LzFse) {
        norm = fse::deserialize_counts(payload);
        pos = fse::kHeaderBytes;
    }
    Sequences seq = read_sequences(payload, pos, orig_len);
    const auto literal_section = payload.subspan(pos);

    std::vector<std::uint8_t> lits;
    if (mode == Mode::LzHuf) {
        try {
            lits = huffman::decode(literal_section, *lengths, seq.literal_count);
        } catch (const InvalidArgument&) {
            throw CorruptStream("invalid lengths");
        }
    } else if (mode == Mode::LzFse) {
        lits = fse::decode(literal_section, fse::build_tables(*norm), seq.literal_count);
    } else {
        if (literal_section.size() != seq.literal_count) {
            throw CorruptStream("literal section size mismatch");
        }
        lits.assign(literal_section.begin(), literal_section.end());
    }
    scatter_literals(seq.tokens, lits);
    return lz77::decode(seq.tokens, orig_len);
}

std::pair<Mode, std::vector<std::uint8_t>> choose_page(std::span<const std::uint8_t> page,
                                                       Policy policy, unsigned fse_table_log,
                                                       PageStats* stats) {
    if (page.empty() || page.size() > kPageSize) {
        throw InvalidArgument("page must hold 1..4096 bytes");
    }
    Mode best_mode = Mode::Raw;
    std::vector<std::uint8_t> best(page.begin(), page.end());
    PageStats best_stats{page.size(), Mode::Raw, 0, 0, 0, {}};
    if (policy == Policy::Raw) {
        if (stats != nullptr) {
            *stats = best_stats;
        }
        return {best_mode, std::move(best)};
    }

    const lz77::TokenStream tokens = lz77::encode(page);
    const std::vector<std::uint8_t> lits = gather_literals(tokens);
    const huffman::Histogram hist = huffman::histogram(lits);
    std::vector<Mode> candidates;
    switch (policy) {
    case Policy::Raw: break;
    case Policy::Huf: candidates = {Mode::LzHuf}; break;
    case Policy::Lz: candidates = {Mode::LzOnly}; break;
    case Policy::Auto: candidates = {Mode::LzHuf, Mode::LzOnly}; break;
    case Policy::Fse:
        // FSE needs two symbols; a one-symbol literal stream goes uncoded.
        candidates = {distinct_symbols(hist) >= 2 ? Mode::LzFse : Mode::LzOnly};
        break;
    }

    // Payload sizes for LZ_ONLY and LZ_HUF are known before any bits are
    // packed, so candidates that cannot beat the current best are skipped.
    std::vector<std::uint8_t> seq;
    write_sequences(seq, tokens);
    for (Mode m : candidates) {
        if (m == Mode::LzOnly && seq.size() + lits.size() >= best.size()) {
            continue;
        }
        if (m == Mode::LzHuf) {
            const auto code = huffman::build_code(hist);
            const std::uint64_t bits = huffman::coded_bits(hist, code.table.lengths);
            if (huffman::kLengthHeaderBytes + seq.size() + (bits + 7) / 8 >= best.size()) {
                continue;
            }
        }
        PageStats s;
        auto payload = encode_tokens(page.size(), tokens, lits, hist, m, fse_table_log, &s);
        if (payload.size() < best.size()) {
            best = std::move(payload);
            best_mode = m;
            best_stats = s;
        }
    }
    if (stats != nullptr) {
        *stats = best_stats;
        stats->mode = best_mode;
    }
    return {best_mode, std::move(best)};
}

ChunkRecord compress_chunk(std::span<const std::uint8_t> data, const CompressOptions& opts,
                           ChunkStats* stats) {
    check_chunk_log(opts.chunk_log);
    if (data.empty()) {
        throw InvalidArgument("empty input");
    }
    if (data.size() > chunk_size(opts.chunk_log)) {
        throw InvalidArgument("chunk larger than chunk size");
    }
    ChunkRecord rec;
    rec.orig_len = static_cast<std::uint32_t>(data.size());

    if (data.size() <= kPageSize && opts.chunk_log == 12) {
        PageStats ps;
        auto [mode, payload] = choose_page(data, opts.policy, opts.fse_table_log, &ps);
        rec.mode = mode;
        rec.payload = std::move(payload);
        if (stats != nullptr) {
            stats->pages = {ps};
        }
        return rec;
    }

    // Wide chunk: a run of page sub-records [mode][len:2 LE][payload].
    std::vector<PageStats> pages;
    std::optional<Mode> first_compressed;
    for (std::size_t off = 0; off < data.size(); off += kPageSize) {
        const auto page = data.subspan(off, std::min(kPageSize, data.size() - off));
        PageStats ps;
        auto [mode, payload] = choose_page(page, opts.policy, opts.fse_table_log, &ps);
        if (mode != Mode::Raw && !first_compressed) {
            first_compressed = mode;
        }
        rec.payload.push_back(static_cast<std::uint8_t>(mode));
        put_le(rec.payload, static_cast<std::uint32_t>(payload.size()), 2);
        rec.payload.insert(rec.payload.end(), payload.begin(), payload.end());
        pages.push_back(ps);
    }
    if (!first_compressed || rec.payload.size() >= data.size()) {
        rec.mode = Mode::Raw;
        rec.payload.assign(data.begin(), data.end());
        for (auto& p : pages) {
            p = PageStats{p.orig_len, Mode::Raw, 0, 0, 0, {}};
        }
    } else {
        rec.mode = *first_compressed;
    }
    if (stats != nullptr) {
        stats->pages = std::move(pages);
    }
    return rec;
}

std::vector<std::uint8_t> decompress_chunk(const ChunkRecord& rec, unsigned chunk_log) {
    check_chunk_log(chunk_log);
    if (static_cast<std::uint8_t>(rec.mode) > 3) {
        throw CorruptStream("bad mode");
    }
    if (rec.orig_len == 0 || rec.orig_len > chunk_size(chunk_log)) {
        throw CorruptStream("bad original length");
    }
    if (rec.mode == Mode::Raw) {
        return decode_page(rec.payload, Mode::Raw, rec.orig_len);
    }
    if (chunk_log == 12) {
        return decode_page(rec.payload, rec.mode, rec.orig_len);
    }

    std::vector<std::uint8_t> out;
    out.reserve(rec.orig_len);
    std::span<const std::uint8_t> in(rec.payload);
    std::size_t pos = 0;
    while (out.size() < rec.orig_len) {
        if (in.size() - pos < 3) {
            throw CorruptStream("truncated page record");
        }
        const std::uint8_t mode = in[pos];
        if (mode > 3) {
            throw CorruptStream("bad mode");
        }
        const std::size_t len = get_le(in, pos + 1, 2);
        pos += 3;
        if (in.size() - pos < len) {
            throw CorruptStream("truncated page record");
        }
        const std::size_t page_len = std::min(kPageSize, rec.orig_len - out.size());
        const auto page = decode_page(in.subspan(pos, len), static_cast<Mode>(mode), page_len);
        out.insert(out.end(), page.begin(), page.end());
        pos += len;
    }
    if (pos != in.size()) {
        throw CorruptStream("trailing bytes in chunk");
    }
    return out;
}

double chunk_ratio(const ChunkRecord& rec, unsigned chunk_log) {
    return static_cast<double>(record_header_size(chunk_log) + rec.comp_len()) /
           static_cast<double>(rec.orig_len);
}

std::uint32_t crc32(std::span<const std::uint8_t> data) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, data.data(), static_cast<uInt>(data.size())));
}

void write_record(std::vector<std::uint8_t>& out, const ChunkRecord& rec, unsigned chunk_log,
                  std::optional<std::uint32_t> crc) {
    const std::size_t w = length_width(chunk_log);
    out.push_back(static_cast<std::uint8_t>(rec.mode));
    put_le(out, rec.orig_len, w);
    put_le(out, static_cast<std::uint32_t>(rec.comp_len()), w);
    out.insert(out.end(), rec.payload.begin(), rec.payload.end());
    if (crc) {
        put_le(out, *crc, 4);
    }
}

ChunkRecord read_record(std::span<const std::uint8_t> in, std::size_t& pos, unsigned chunk_log,
                        bool with_crc, std::uint32_t* crc) {
    const std::size_t w = length_width(chunk_log);
    const std::size_t header = 1 + 2 * w;
    if (in.size() - pos < header) {
        throw CorruptStream("truncated record header");
    }
    ChunkRecord rec;
    const std::uint8_t mode = in[pos];
    if (mode > 3) {
        throw CorruptStream("bad mode");
    }
    rec.mode = static_cast<Mode>(mode);
    rec.orig_len = get_le(in, pos + 1, w);
    const std::size_t comp_len = get_le(in, pos + 1 + w, w);
    if (rec.orig_len == 0 || rec.orig_len > chunk_size(chunk_log)) {
        throw CorruptStream("bad original length");
    }
    if ((rec.mode == Mode::Raw && comp_len != rec.orig_len) ||
        (rec.mode != Mode::Raw && comp_len >= rec.orig_len)) {
        throw CorruptStream("record length mismatch");
    }
    pos += header;
    const std::size_t trailer = with_crc ? 4 : 0;
    if (in.size() - pos < comp_len + trailer) {
        throw CorruptStream("truncated payload");
    }
    rec.payload.assign(in.begin() + static_cast<std::ptrdiff_t>(pos),
                       in.begin() + static_cast<std::ptrdiff_t>(pos + comp_len));
    pos += comp_len;
    if (with_crc) {
        const std::uint32_t v = get_le(in, pos, 4);
        if (crc != nullptr) {
            *crc = v;
        }
        pos += 4;
    }
    return rec;
}

std::vector<std::uint8_t> encode_stream_header(const StreamHeader& h) {
    check_chunk_log(h.chunk_log);
    std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
    out.push_back(static_cast<std::uint8_t>(kVersion | (h.crc ? kCrcFlag : 0)));
    out.push_back(static_cast<std::uint8_t>(h.chunk_log));
    return out;
}

StreamHeader decode_stream_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kStreamHeaderBytes || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw UnsupportedContainer();
    }
    const std::uint8_t version = bytes[4];
    if ((version & 0x0f) != kVersion || (version & 0xe0) != 0) {
        throw UnsupportedContainer();
    }
    StreamHeader h;
    h.crc = (version & kCrcFlag) != 0;
    h.chunk_log = bytes[5];
    if (h.chunk_log < kMinChunkLog || h.chunk_log > kMaxChunkLog) {
        throw UnsupportedContainer();
    }
    return h;
}

namespace {

std::vector<std::uint8_t> encode_record_bytes(std::span<const std::uint8_t> chunk,
                                              const StreamOptions& opts) {
    std::vector<std::uint8_t> out;
    const ChunkRecord rec = compress_chunk(chunk, opts.chunk);
    write_record(out, rec, opts.chunk.chunk_log,
                 opts.crc ? std::optional<std::uint32_t>(crc32(chunk)) : std::nullopt);
    return out;
}

// Compress `chunks` (in order) with up to `jobs` workers.
std::vector<std::vector<std::uint8_t>> encode_batch(
    const std::vector<std::span<const std::uint8_t>>& chunks, const StreamOptions& opts) {
    std::vector<std::vector<std::uint8_t>> out(chunks.size());
    if (opts.jobs <= 1 || chunks.size() <= 1) {
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            out[i] = encode_record_bytes(chunks[i], opts);
        }
        return out;
    }
    const std::size_t workers = std::min<std::size_t>(opts.jobs, chunks.size());
    std::vector<std::future<void>> futures;
    for (std::size_t w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < chunks.size(); i += workers) {
                out[i] = encode_record_bytes(chunks[i], opts);
            }
        }));
    }
    for (auto& f : futures) {
        f.get();
    }
    return out;
}

std::vector<std::uint8_t> decode_record(const ChunkRecord& rec, const StreamHeader& h,
                                        std::uint32_t crc) {
    auto data = decompress_chunk(rec, h.chunk_log);
    if (h.crc && crc32(data) != crc) {
        throw CorruptStream("checksum mismatch");
    }
    return data;
}

} // namespace

std::vector<std::uint8_t> compress_buffer(std::span<const std::uint8_t> data,
                                          const StreamOptions& opts) {
    std::vector<std::uint8_t> out = encode_stream_header({opts.chunk.chunk_log, opts.crc});
    const std::size_t cs = chunk_size(opts.chunk.chunk_log);
    std::vector<std::span<const std::uint8_t>> chunks;
    for (std::size_t off = 0; off < data.size(); off += cs) {
        chunks.push_back(data.subspan(off, std::min(cs, data.size() - off)));
    }
    for (const auto& rec : encode_batch(chunks, opts)) {
        out.insert(out.end(), rec.begin(), rec.end());
    }
    return out;
}

std::vector<std::uint8_t> decompress_buffer(std::span<const std::uint8_t> container) {
    const StreamHeader h = decode_stream_header(container);
    std::vector<std::uint8_t> out;
    std::size_t pos = kStreamHeaderBytes;
    while (pos < container.size()) {
        std::uint32_t crc = 0;
        const ChunkRecord rec = read_record(container, pos, h.chunk_log, h.crc, &crc);
        const auto data = decode_record(rec, h, crc);
        out.insert(out.end(), data.begin(), data.end());
    }
    return out;
}

void compress_stream(std::istream& in, std::ostream& out, const StreamOptions& opts) {
    const auto header = encode_stream_header({opts.chunk.chunk_log, opts.crc});
    out.write(reinterpret_cast<const char*>(header.data()),
              static_cast<std::streamsize>(header.size()));

    const std::size_t cs = chunk_size(opts.chunk.chunk_log);
    const std::size_t batch = std::max<std::size_t>(1, opts.jobs) * 8;
    std::vector<std::uint8_t> buffer(cs * batch);
    for (;;) {
        in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
        const auto got = static_cast<std::size_t>(in.gcount());
        if (in.bad()) {
            throw IoError("read failed");
        }
        if (got == 0) {
            break;
        }
        std::vector<std::span<const std::uint8_t>> chunks;
        const std::span<const std::uint8_t> filled(buffer.data(), got);
        for (std::size_t off = 0; off < got; off += cs) {
            chunks.push_back(filled.subspan(off, std::min(cs, got - off)));
        }
        for (const auto& rec : encode_batch(chunks, opts)) {
            out.write(reinterpret_cast<const char*>(rec.data()),
                      static_cast<std::streamsize>(rec.size()));
        }
        if (!out) {
            throw IoError("write failed");
        }
        if (got < buffer.size()) {
            break;
        }
    }
}

void decompress_stream(std::istream& in, std::ostream& out) {
    std::array<std::uint8_t, kStreamHeaderBytes> hb{};
    in.read(reinterpret_cast<char*>(hb.data()), hb.size());
    if (static_cast<std::size_t>(in.gcount()) != hb.size()) {
        throw UnsupportedContainer();
    }
    const StreamHeader h = decode_stream_header(hb);
    const std::size_t w = length_width(h.chunk_log);
    const std::size_t header_len = 1 + 2 * w;

    std::vector<std::uint8_t> buf;
    for (;;) {
        buf.resize(header_len);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(header_len));
        const auto got = static_cast<std::size_t>(in.gcount());
        if (got == 0) {
            break;
        }
        if (got != header_len) {
            throw CorruptStream("truncated record header");
        }
        const std::size_t comp_len = get_le(buf, 1 + w, w);
        if (comp_len > chunk_size(h.chunk_log)) {
            throw CorruptStream("record length mismatch");
        }
        const std::size_t rest = comp_len + (h.crc ? 4 : 0);
        buf.resize(header_len + rest);
        in.read(reinterpret_cast<char*>(buf.data() + header_len), static_cast<std::streamsize>(rest));
        if (static_cast<std::size_t>(in.gcount()) != rest) {
            throw CorruptStream("truncated payload");
        }
        std::size_t pos = 0;
        std::uint32_t crc = 0;
        const ChunkRecord rec = read_record(buf, pos, h.chunk_log, h.crc, &crc);
        const auto data = decode_record(rec, h, crc);
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size()));
        if (!out) {
            throw IoError("write failed");
        }
    }
}

} // namespace dpz::format
