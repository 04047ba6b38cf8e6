#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>

#include "relbn/curtailment.hpp"
#include "relbn/dataset.hpp"
#include "relbn/grid.hpp"
#include "relbn/rng.hpp"
#include "relbn/state.hpp"

namespace relbn {

/// Importance-sampling proposal: each failure probability is multiplied by
/// `distortion_factor` and capped at `probability_cap`. The cap never pulls a
/// probability below its true value.
struct ProposalConfig {
  double distortion_factor = 1.0;
  double probability_cap = 0.5;

  double distorted(double p) const;
  void validate() const;
};

struct SamplerConfig {
  std::uint64_t seed = 0;
  std::size_t max_samples = 100000;
  double cov_threshold = 0.05;
  ProposalConfig proposal;
  std::size_t streams = 1;
  /// Worker threads; 0 means one per stream up to the hardware concurrency.
  /// Never affects the output.
  std::size_t threads = 0;
  /// Samples between convergence checks.
  std::size_t check_interval = 1000;

  void validate() const;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

SystemState sample_state(const GridCase& grid, const ProposalConfig& proposal, Xoshiro256& rng);

struct EstimateWithCI {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  bool converged = false;

  double cov() const;
};

/// Weighted ratio estimate of P(LOL); `converged` compares the coefficient of
/// variation against `cov_threshold`.
EstimateWithCI lolp_estimate(const SampleSet& samples, double cov_threshold = 0.05);

/// Maps a sampled state to its curtailment. Must be safe to call concurrently.
using Resolver = std::function<CurtailmentSolution(const SystemState&)>;

/// Raised when the resolver throws; carries the state that triggered it.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, SystemState state)
      : std::runtime_error(what), state_(std::move(state)) {}
  const SystemState& state() const { return state_; }

 private:
  SystemState state_;
};

/// Non-sequential Monte Carlo. Global sample j belongs to stream j % streams;
/// sampling proceeds in rounds of `check_interval` samples and stops after
/// the first round whose LOLP coefficient of variation is below the
/// threshold, or at `max_samples`. Records are ordered by (stream, draw).
SampleSet run_sampling(const GridCase& grid, const SamplerConfig& config, const Resolver& resolve);

/// resolve = solve_curtailment on `grid`, memoised per state.
SampleSet run_sampling(const GridCase& grid, const SamplerConfig& config);

}  // namespace relbn
