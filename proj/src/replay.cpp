#include "dstack/replay.hpp"

#include <exception>

namespace dstack {

std::vector<Decision> replay_serial(const PoolConfig& config, std::span<const double> input,
                                    std::span<const AblationMask> masks) {
  std::vector<Decision> out;
  out.reserve(masks.size());
  for (const auto& m : masks) out.push_back(pool_forward(config, input, m).decision);
  return out;
}

std::vector<Decision> replay_parallel(const PoolConfig& config, std::span<const double> input,
                                      std::span<const AblationMask> masks) {
  std::vector<Decision> out(masks.size());
  std::vector<std::exception_ptr> errors(masks.size());
  const auto n = static_cast<std::ptrdiff_t>(masks.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = pool_forward(config, input, masks[i]).decision;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  // Rethrow the error of the lowest failing index, as the serial path would.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace dstack
