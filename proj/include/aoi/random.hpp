#pragma once

#include <cstdint>
#include <random>

namespace aoi {

using Engine = std::mt19937_64;

/// Named substreams. Each (replication, source, purpose) triple seeds its own engine, so
/// drawing from one never shifts another.
enum class StreamKind : std::uint32_t {
    arrivals = 1,
    service = 2,
    preemption = 3,
    reservoir = 4,
};

inline Engine make_stream(std::uint64_t master_seed, std::uint64_t replication, std::uint64_t source,
                          StreamKind kind) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(replication), static_cast<std::uint32_t>(replication >> 32),
                      static_cast<std::uint32_t>(source), static_cast<std::uint32_t>(kind)};
    return Engine(seq);
}

/// Uniform draw in [0, 1).
inline double uniform01(Engine& g) { return std::generate_canonical<double, 53>(g); }

} // namespace aoi
