#pragma once

#include <span>
#include <vector>

#include "dstack/parallel.hpp"
#include "dstack/pool.hpp"

namespace dstack {

// Re-runs the decision once per mask. Result i belongs to masks[i]; the
// parallel kernel returns bitwise the same vector as the serial one.
std::vector<Decision> replay_serial(const PoolConfig& config, std::span<const double> input,
                                    std::span<const AblationMask> masks);
std::vector<Decision> replay_parallel(const PoolConfig& config, std::span<const double> input,
                                      std::span<const AblationMask> masks);

inline std::vector<Decision> replay(Exec exec, const PoolConfig& config, std::span<const double> input,
                                    std::span<const AblationMask> masks) {
  return exec == Exec::Parallel ? replay_parallel(config, input, masks) : replay_serial(config, input, masks);
}

}  // namespace dstack
