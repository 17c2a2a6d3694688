// dpz: command-line front end for the codec, benchmarks and FTL simulator.

#include "dpz/bench.hpp"
#include "dpz/error.hpp"
#include "dpz/format.hpp"
#include "dpz/ftl.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace dpz;

namespace {

enum Exit { kOk = 0, kUsage = 1, kCorrupt = 2, kIo = 3 };

class UsageError : public Error {
public:
    using Error::Error;
};

// Output goes to a sibling temp file and is renamed into place on commit;
// without -o it goes to stdout.
class Output {
public:
    explicit Output(const std::string& path, bool binary = true) : path_(path) {
        if (path_.empty()) return;
        tmp_ = path_ + ".tmp" + std::to_string(std::random_device{}());
        file_.open(tmp_, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
        if (!file_) throw IoError("cannot write " + path_);
    }
    ~Output() {
        if (!tmp_.empty() && !committed_) {
            file_.close();
            std::error_code ec;
            fs::remove(tmp_, ec);
        }
    }
    Output(const Output&) = delete;
    Output& operator=(const Output&) = delete;

    std::ostream& stream() { return path_.empty() ? std::cout : file_; }

    void commit() {
        stream().flush();
        if (!stream()) throw IoError("write failed");
        if (path_.empty()) return;
        file_.close();
        std::error_code ec;
        fs::rename(tmp_, path_, ec);
        if (ec) throw IoError("cannot write " + path_ + ": " + ec.message());
        committed_ = true;
    }

private:
    std::string path_;
    std::string tmp_;
    std::ofstream file_;
    bool committed_ = false;
};

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    return in;
}

std::vector<std::uint8_t> read_all(const std::string& path) {
    auto in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + path);
    const std::string s = ss.str();
    return {s.begin(), s.end()};
}

format::Policy policy_from(const std::string& name) {
    const auto p = format::parse_policy(name);
    if (!p) throw UsageError("unknown mode '" + name + "'");
    return *p;
}

struct CodecArgs {
    std::string input;
    std::string output;
    std::string mode = "auto";
    unsigned chunk_log = format::kDefaultChunkLog;
    bool crc = false;
    unsigned jobs = 1;
};

int run_compress(const CodecArgs& a) {
    format::StreamOptions opts;
    opts.chunk.policy = policy_from(a.mode);
    opts.chunk.chunk_log = a.chunk_log;
    opts.crc = a.crc;
    opts.jobs = a.jobs;
    auto in = open_input(a.input);
    Output out(a.output);
    format::compress_stream(in, out.stream(), opts);
    out.commit();
    return kOk;
}

int run_decompress(const CodecArgs& a) {
    auto in = open_input(a.input);
    Output out(a.output);
    format::decompress_stream(in, out.stream());
    out.commit();
    return kOk;
}

struct BenchArgs {
    std::string corpus;
    std::string output;
    std::string mode = "auto";
    unsigned chunk_log = format::kDefaultChunkLog;
    unsigned jobs = 1;
    std::uint64_t seed = bench::kCorpusSeed;
    bool json = false;
    bool no_timing = false;
};

int run_bench(const BenchArgs& a) {
    bench::BenchOptions opts;
    opts.compress.policy = policy_from(a.mode);
    opts.compress.chunk_log = a.chunk_log;
    opts.jobs = a.jobs;
    const auto corpus = a.corpus.empty() ? bench::mini_corpus(a.seed) : bench::load_corpus(a.corpus);
    const auto report = bench::bench_run(corpus, opts);
    Output out(a.output, false);
    out.stream() << (a.json ? bench::report_json(report, !a.no_timing) + "\n"
                            : bench::report_text(report, !a.no_timing));
    out.commit();
    return kOk;
}

int run_entropy(const std::string& input, bool json) {
    const auto data = read_all(input);
    char buf[64];
    if (data.empty()) throw UsageError("entropy of an empty file is undefined");
    const auto r = bench::shannon_entropy(data);
    if (json) {
        std::snprintf(buf, sizeof buf, "%.10f", r.bits_per_symbol);
        std::cout << "{\"file\": \"" << input << "\", \"bytes\": " << r.n << ", \"entropy\": " << buf
                  << "}\n";
    } else {
        std::snprintf(buf, sizeof buf, "%.4f", r.bits_per_symbol);
        std::cout << buf << "\n";
    }
    return kOk;
}

struct GenArgs {
    double ratio = 0.5;
    std::size_t size = 1 << 20;
    std::uint64_t seed = 1;
    std::string output;
};

int run_gen(const GenArgs& a) {
    const auto data = bench::gen_data(a.ratio, a.size, a.seed);
    Output out(a.output);
    out.stream().write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    out.commit();
    return kOk;
}

struct FtlArgs {
    std::string trace;
    std::string output;
    std::size_t ops = 0;
    std::uint64_t seed = 1;
    std::size_t blocks = 256;
    std::size_t pages_per_block = 64;
    std::size_t page_size = 4096;
    double op = 0.2;
    double capacity = 1.0;
    std::string mode = "auto";
    bool zero_unmapped = false;
    bool json = false;
};

// Mixed write/read/GC workload over the exposed range. Reads only target
// pages written earlier in the trace.
std::vector<ftl::TraceOp> random_trace(std::size_t n, std::uint64_t lpns, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<ftl::TraceOp> ops;
    std::vector<std::uint64_t> written;
    std::vector<bool> seen(lpns, false);
    for (std::size_t i = 0; i < n; ++i) {
        ftl::TraceOp op;
        op.line = i + 1;
        const auto kind = rng() % 100;
        if (kind < 50 || written.empty()) {
            op.kind = ftl::TraceOp::Kind::Write;
            op.lpn = rng() % lpns;
            const auto tenth = rng() % 10;
            const auto pseed = rng() % 64;
            op.pattern = "ratio:0." + std::to_string(tenth) + ":" + std::to_string(pseed);
            if (!seen[op.lpn]) {
                seen[op.lpn] = true;
                written.push_back(op.lpn);
            }
        } else if (kind < 98) {
            op.kind = ftl::TraceOp::Kind::Read;
            op.lpn = written[rng() % written.size()];
        } else {
            op.kind = ftl::TraceOp::Kind::Gc;
        }
        ops.push_back(op);
    }
    return ops;
}

int run_ftl(const FtlArgs& a) {
    ftl::SimOptions opts;
    opts.geometry.block_count = a.blocks;
    opts.geometry.pages_per_block = a.pages_per_block;
    opts.geometry.page_size = a.page_size;
    opts.geometry.op_fraction = a.op;
    opts.capacity_factor = a.capacity;
    opts.policy = policy_from(a.mode);
    opts.zero_unmapped = a.zero_unmapped;
    ftl::Simulator sim(opts);

    std::vector<ftl::TraceOp> ops;
    if (!a.trace.empty()) {
        auto in = open_input(a.trace);
        ops = ftl::parse_trace(in);
    } else if (a.ops > 0) {
        ops = random_trace(a.ops, sim.exposed_lpns(), a.seed);
    } else {
        throw UsageError("ftl needs --trace or --random-ops");
    }
    const auto result = ftl::run_trace(sim, ops);
    if (result.unmapped_reads > 0 && !a.zero_unmapped) {
        throw UsageError("unmapped read (" + std::to_string(result.unmapped_reads) +
                         " reads of unwritten pages; pass --zero-unmapped to allow)");
    }
    const auto m = sim.metrics();
    Output out(a.output, false);
    if (a.json) {
        out.stream() << ftl::trace_result_json(result, m) << "\n";
    } else {
        auto opt = [](std::optional<double> v) {
            if (!v) return std::string("n/a");
            char b[32];
            std::snprintf(b, sizeof b, "%.4f", *v);
            return std::string(b);
        };
        out.stream() << "ops " << ops.size() << ": writes " << result.writes << ", reads " << result.reads
                     << ", gc " << result.gc_calls << " (futile " << result.gc_futile << "), no space "
                     << result.no_space << "\n"
                     << "shadow mismatches " << result.shadow_mismatches << "\n"
                     << "WAF " << opt(m.waf()) << ", RAF " << opt(m.raf()) << ", utilization "
                     << opt(m.space_utilization()) << ", erases " << m.erases << "\n"
                     << "state " << std::hex << sim.state_hash() << std::dec << "\n";
    }
    out.commit();
    return result.shadow_mismatches == 0 ? kOk : kCorrupt;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DPZ block compressor, benchmark and FTL simulator"};
    app.require_subcommand(1);

    auto chunk_log_check = CLI::Range(format::kMinChunkLog, format::kMaxChunkLog);
    auto mode_check = CLI::IsMember({"auto", "raw", "huf", "fse", "lz"});

    CodecArgs c;
    auto* compress = app.add_subcommand("compress", "Compress a file into a .dpz container");
    compress->add_option("input", c.input, "Input file")->required();
    compress->add_option("-o,--output", c.output, "Output file (default: stdout)");
    compress->add_option("--mode", c.mode, "Encoding policy")->check(mode_check);
    compress->add_option("--chunk-log", c.chunk_log, "log2 chunk size")->check(chunk_log_check);
    compress->add_flag("--crc", c.crc, "Append a CRC32 to every chunk");
    compress->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::Range(1u, 256u));

    CodecArgs d;
    auto* decompress = app.add_subcommand("decompress", "Restore a .dpz container");
    decompress->add_option("input", d.input, "Input container")->required();
    decompress->add_option("-o,--output", d.output, "Output file (default: stdout)");

    BenchArgs b;
    auto* benchc = app.add_subcommand("bench", "Chunked compression ratio report");
    benchc->add_option("corpus", b.corpus, "File or directory (default: built-in 1 MiB corpus)");
    benchc->add_option("-o,--output", b.output, "Report file (default: stdout)");
    benchc->add_option("--mode", b.mode, "Encoding policy")->check(mode_check);
    benchc->add_option("--chunk-log", b.chunk_log, "log2 chunk size")->check(chunk_log_check);
    benchc->add_option("--jobs", b.jobs, "Worker threads")->check(CLI::Range(1u, 256u));
    benchc->add_option("--seed", b.seed, "Seed for the built-in corpus");
    benchc->add_flag("--json", b.json, "JSON report");
    benchc->add_flag("--no-timing", b.no_timing, "Leave out wall-clock columns");

    std::string ent_input;
    bool ent_json = false;
    auto* entropy = app.add_subcommand("entropy", "Byte entropy in bits per symbol");
    entropy->add_option("input", ent_input, "Input file")->required();
    entropy->add_flag("--json", ent_json, "JSON output");

    GenArgs g;
    auto* gen = app.add_subcommand("gen", "Synthetic data with a target compression ratio");
    gen->add_option("--ratio", g.ratio, "Target ratio in [0, 1]")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--size", g.size, "Bytes to generate");
    gen->add_option("--seed", g.seed, "Generator seed");
    gen->add_option("-o,--output", g.output, "Output file (default: stdout)");

    FtlArgs f;
    auto* ftlc = app.add_subcommand("ftl", "Replay a trace on the FTL simulator");
    ftlc->add_option("--trace", f.trace, "Trace file");
    ftlc->add_option("--random-ops", f.ops, "Generate a random trace of this many operations");
    ftlc->add_option("--seed", f.seed, "Seed for --random-ops");
    ftlc->add_option("--blocks", f.blocks, "Erase blocks");
    ftlc->add_option("--pages-per-block", f.pages_per_block, "Pages per block");
    ftlc->add_option("--page-size", f.page_size, "Flash page bytes");
    ftlc->add_option("--op", f.op, "Over-provisioning fraction");
    ftlc->add_option("--capacity-factor", f.capacity, "Exposed / physical user capacity");
    ftlc->add_option("--mode", f.mode, "Encoding policy")->check(mode_check);
    ftlc->add_flag("--zero-unmapped", f.zero_unmapped, "Unwritten pages read as zeros");
    ftlc->add_flag("--json", f.json, "JSON metrics");
    ftlc->add_option("-o,--output", f.output, "Report file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*compress) return run_compress(c);
        if (*decompress) return run_decompress(d);
        if (*benchc) return run_bench(b);
        if (*entropy) return run_entropy(ent_input, ent_json);
        if (*gen) return run_gen(g);
        if (*ftlc) return run_ftl(f);
    } catch (const UsageError& e) {
        std::cerr << "dpz: " << e.what() << "\n";
        return kUsage;
    } catch (const InvalidArgument& e) {
        std::cerr << "dpz: " << e.what() << "\n";
        return kUsage;
    } catch (const CorruptStream& e) {
        std::cerr << "dpz: " << e.what() << "\n";
        return kCorrupt;
    } catch (const UnsupportedContainer& e) {
        std::cerr << "dpz: " << e.what() << "\n";
        return kCorrupt;
    } catch (const IoError& e) {
        std::cerr << "dpz: " << e.what() << "\n";
        return kIo;
    } catch (const Error& e) {
        std::cerr << "dpz: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
