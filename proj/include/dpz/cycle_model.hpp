#pragma once

// Analytical cost model of the hardware compression engine.

#include "dpz/huffman.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace dpz::cycle {

inline constexpr unsigned kBytesPerCycle = 8;
inline constexpr std::uint64_t kOverheadCycles = 1214;
inline constexpr double kDefaultClockHz = 1e9;
inline constexpr unsigned kDefaultEngines = 2;

struct ModelParams {
    double clock_hz = kDefaultClockHz;
    std::uint64_t overhead_cycles = kOverheadCycles;
    unsigned engines = kDefaultEngines;
};

struct CycleEstimate {
    std::uint64_t n_bytes = 0;
    std::uint64_t pipeline_cycles = 0;
    std::uint64_t huffman_cycles = 0;
    std::uint64_t overhead_cycles = 0;
    double clock_hz = kDefaultClockHz;

    std::uint64_t total_cycles() const { return pipeline_cycles + huffman_cycles + overhead_cycles; }
    double latency_us() const { return double(total_cycles()) / clock_hz * 1e6; }
    /// Single block in isolation, bytes / latency.
    double throughput_gbps() const { return double(n_bytes) / (latency_us() * 1e3); }
};

/// Throws InvalidArgument when n_bytes is 0.
CycleEstimate estimate(std::uint64_t n_bytes, const huffman::CanonizationTrace& trace,
                       const ModelParams& params = {});

/// Trace at every stage bound (scan 256, redistribute 10, repair 8).
huffman::CanonizationTrace worst_trace();

/// Per-engine streaming rate in GB/s, the n -> infinity limit of one block.
double steady_engine_gbps(const ModelParams& params = {});
double steady_device_gbps(const ModelParams& params = {});

struct RunEstimate {
    std::uint64_t bytes = 0;
    std::uint64_t makespan_cycles = 0;
    double gbps = 0;
};

/// Back-to-back blocks dealt round robin over the engines. Within an engine
/// the code-length stage of one block overlaps the match stage of the next,
/// so a block occupies max(pipeline, huffman) cycles; pipeline fill is paid
/// once per engine.
RunEstimate estimate_run(
    const std::vector<std::pair<std::uint64_t, huffman::CanonizationTrace>>& blocks,
    const ModelParams& params = {});

} // namespace dpz::cycle
