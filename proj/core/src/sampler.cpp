#include "relbn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>

namespace relbn {

double ProposalConfig::distorted(double p) const {
  if (distortion_factor == 1.0) return p;
  return std::max(p, std::min(p * distortion_factor, probability_cap));
}

void ProposalConfig::validate() const {
  if (!(distortion_factor >= 1.0) || !std::isfinite(distortion_factor))
    throw ConfigError("distortion factor must be a finite value >= 1");
  if (!(probability_cap > 0.0 && probability_cap < 1.0)) throw ConfigError("probability cap must lie in (0,1)");
}

void SamplerConfig::validate() const {
  if (max_samples < 1) throw ConfigError("max_samples must be at least 1");
  if (!(cov_threshold > 0.0)) throw ConfigError("cov_threshold must be positive");
  if (streams < 1) throw ConfigError("streams must be at least 1");
  if (check_interval < 1) throw ConfigError("check_interval must be at least 1");
  proposal.validate();
}

SystemState sample_state(const GridCase& grid, const ProposalConfig& proposal, Xoshiro256& rng) {
  SystemState state;
  state.gen_down.resize(grid.generators.size());
  state.line_down.resize(grid.lines.size());
  double weight = 1.0;
  auto draw = [&](double p) -> std::uint8_t {
    const double q = proposal.distorted(p);
    // Down when the uniform draw falls at or below the outage rate.
    const bool down = rng.uniform() < q;
    if (q != p) weight *= down ? p / q : (1.0 - p) / (1.0 - q);
    return down ? 1 : 0;
  };
  for (std::size_t g = 0; g < grid.generators.size(); ++g) state.gen_down[g] = draw(grid.generators[g].for_prob);
  for (std::size_t l = 0; l < grid.lines.size(); ++l) state.line_down[l] = draw(grid.lines[l].for_prob);
  state.weight = weight;
  return state;
}

double EstimateWithCI::cov() const {
  return value > 0.0 ? std_error / value : std::numeric_limits<double>::infinity();
}

namespace {

EstimateWithCI estimate_from(const std::vector<const SampleRecord*>& records, double cov_threshold) {
  EstimateWithCI est;
  est.n_samples = records.size();
  double sw = 0.0, swy = 0.0;
  for (const auto* r : records) {
    sw += r->weight;
    swy += r->weight * r->lol;
  }
  if (sw <= 0.0) return est;
  est.value = std::clamp(swy / sw, 0.0, 1.0);
  if (records.size() > 1) {
    double acc = 0.0;
    for (const auto* r : records) {
      const double d = r->lol - est.value;
      acc += r->weight * r->weight * d * d;
    }
    const double n = static_cast<double>(records.size());
    est.std_error = std::sqrt(n / (n - 1.0) * acc) / sw;
  }
  est.converged = est.value > 0.0 && est.cov() < cov_threshold;
  return est;
}

std::string state_key(const SystemState& s) {
  std::string key(s.gen_down.size() + s.line_down.size(), '0');
  std::size_t i = 0;
  for (auto b : s.gen_down) key[i++] = static_cast<char>('0' + b);
  for (auto b : s.line_down) key[i++] = static_cast<char>('0' + b);
  return key;
}

// Per-stream memo of state -> bus bits. Only affects speed.
class BusBitCache {
 public:
  static constexpr std::size_t kMaxEntries = 1 << 20;

  const std::vector<std::uint8_t>* find(const std::string& key) const {
    auto it = map_.find(key);
    return it == map_.end() ? nullptr : &it->second;
  }
  void insert(std::string key, std::vector<std::uint8_t> bits) {
    if (map_.size() < kMaxEntries) map_.emplace(std::move(key), std::move(bits));
  }

 private:
  std::unordered_map<std::string, std::vector<std::uint8_t>> map_;
};

struct Stream {
  Xoshiro256 rng;
  BusBitCache cache;
  std::vector<SampleRecord> records;
  std::exception_ptr error;
};

}  // namespace

EstimateWithCI lolp_estimate(const SampleSet& samples, double cov_threshold) {
  if (samples.empty()) throw std::invalid_argument("lolp_estimate: empty sample set");
  std::vector<const SampleRecord*> refs;
  refs.reserve(samples.size());
  for (const auto& r : samples.records) refs.push_back(&r);
  return estimate_from(refs, cov_threshold);
}

SampleSet run_sampling(const GridCase& grid, const SamplerConfig& config, const Resolver& resolve) {
  config.validate();
  const std::size_t n_streams = config.streams;
  std::vector<Stream> streams;
  streams.reserve(n_streams);
  for (std::size_t k = 0; k < n_streams; ++k) streams.push_back({Xoshiro256::for_stream(config.seed, k), {}, {}, {}});

  auto run_stream = [&](std::size_t k, std::size_t begin, std::size_t end) {
    auto& st = streams[k];
    try {
      // Global indices j in [begin, end) with j % n_streams == k, in order.
      std::size_t j = begin + (k + n_streams - begin % n_streams) % n_streams;
      for (; j < end; j += n_streams) {
        auto state = sample_state(grid, config.proposal, st.rng);
        SampleRecord record;
        record.g_bits = state.gen_down;
        record.l_bits = state.line_down;
        record.weight = state.weight;
        auto key = state_key(state);
        if (const auto* bits = st.cache.find(key)) {
          record.b_bits = *bits;
        } else {
          CurtailmentSolution solution;
          try {
            solution = resolve(state);
          } catch (const std::exception& e) {
            throw SolverFailure(std::string("curtailment solver failed: ") + e.what(), state);
          }
          record.b_bits = build_record(state, solution).b_bits;
          st.cache.insert(std::move(key), record.b_bits);
        }
        record.lol = std::find(record.b_bits.begin(), record.b_bits.end(), 1) != record.b_bits.end() ? 1 : 0;
        st.records.push_back(std::move(record));
      }
    } catch (...) {
      st.error = std::current_exception();
    }
  };

  std::size_t workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n_streams);

  std::size_t done = 0;
  while (done < config.max_samples) {
    const std::size_t end = std::min(config.max_samples, done + config.check_interval);
    if (workers <= 1) {
      for (std::size_t k = 0; k < n_streams; ++k) run_stream(k, done, end);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          for (std::size_t k = w; k < n_streams; k += workers) run_stream(k, done, end);
        });
    }
    for (auto& st : streams)
      if (st.error) std::rethrow_exception(st.error);
    done = end;

    // Convergence is judged on the merged (stream, draw) ordering.
    std::vector<const SampleRecord*> refs;
    refs.reserve(done);
    for (const auto& st : streams)
      for (const auto& r : st.records) refs.push_back(&r);
    if (estimate_from(refs, config.cov_threshold).converged) break;
  }

  auto set = make_sample_set(grid);
  set.records.reserve(done);
  for (auto& st : streams)
    for (auto& r : st.records) set.records.push_back(std::move(r));
  return set;
}

SampleSet run_sampling(const GridCase& grid, const SamplerConfig& config) {
  return run_sampling(grid, config, [&grid](const SystemState& s) { return solve_curtailment(grid, s); });
}

}  // namespace relbn
