#include "dpz/cycle_model.hpp"

#include "dpz/error.hpp"

#include <algorithm>

namespace dpz::cycle {

namespace {

std::uint64_t pipeline_cycles(std::uint64_t n) { return (n + kBytesPerCycle - 1) / kBytesPerCycle; }

void check_params(const ModelParams& p) {
    if (!(p.clock_hz > 0) || p.engines == 0) {
        throw InvalidArgument("clock and engine count must be positive");
    }
}

} // namespace

CycleEstimate estimate(std::uint64_t n_bytes, const huffman::CanonizationTrace& trace,
                       const ModelParams& params) {
    check_params(params);
    if (n_bytes == 0) {
        throw InvalidArgument("n_bytes must be at least 1");
    }
    CycleEstimate e;
    e.n_bytes = n_bytes;
    e.pipeline_cycles = pipeline_cycles(n_bytes);
    e.huffman_cycles = trace.total();
    e.overhead_cycles = params.overhead_cycles;
    e.clock_hz = params.clock_hz;
    return e;
}

huffman::CanonizationTrace worst_trace() {
    huffman::CanonizationTrace t;
    t.n_leaves = huffman::kAlphabet;
    t.scan_cycles = 256;
    t.redistribute_cycles = 10;
    t.repair_cycles = 8;
    return t;
}

double steady_engine_gbps(const ModelParams& params) {
    check_params(params);
    return kBytesPerCycle * params.clock_hz / 1e9;
}

double steady_device_gbps(const ModelParams& params) {
    return steady_engine_gbps(params) * params.engines;
}

RunEstimate estimate_run(
    const std::vector<std::pair<std::uint64_t, huffman::CanonizationTrace>>& blocks,
    const ModelParams& params) {
    check_params(params);
    RunEstimate r;
    if (blocks.empty()) {
        return r;
    }
    std::vector<std::uint64_t> busy(params.engines, 0);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& [n, trace] = blocks[i];
        r.bytes += n;
        busy[i % params.engines] += std::max<std::uint64_t>(pipeline_cycles(n), trace.total());
    }
    const std::size_t used = std::min<std::size_t>(params.engines, blocks.size());
    r.makespan_cycles =
        *std::max_element(busy.begin(), busy.begin() + static_cast<std::ptrdiff_t>(used)) +
        params.overhead_cycles;
    r.gbps = double(r.bytes) / (double(r.makespan_cycles) / params.clock_hz) / 1e9;
    return r;
}

} // namespace dpz::cycle
