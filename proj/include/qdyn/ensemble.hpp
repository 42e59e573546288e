#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "qdyn/accumulator.hpp"
#include "qdyn/rng.hpp"
#include "qdyn/sde.hpp"

namespace qdyn {

enum class Reduction {
  deterministic,  // static trajectory partition, merged in worker order
  fast,           // dynamic work stealing
};

Reduction parse_reduction(const std::string& name);
std::string to_string(Reduction reduction);

struct EnsembleConfig {
  std::uint64_t seed = 1;
  int trajectories = 1000;
  double dt = 1e-3;
  std::vector<double> times;  // measurement times, ascending, each a multiple of dt
  int threads = 1;
  Reduction reduction = Reduction::deterministic;
  double unreliable_fraction = 0.01;
  /// Trajectories are split into this many contiguous blocks whose statistics are kept
  /// separately, for jackknife errors of nonlinear estimators.
  int groups = 1;
};

template <class Trajectory>
struct EnsembleProblem {
  std::vector<std::string> observables;
  std::function<Trajectory(const NoiseStream&)> sample;
  /// Advance by one dt from time t; `step` is the global step index for noise counters.
  std::function<StepStatus(Trajectory&, double t, std::uint32_t step, const NoiseStream&)> advance;
  /// Writes one value per observable and returns the trajectory weight.
  std::function<double(const Trajectory&, double t, std::span<cplx> values)> observe;
};

struct EnsembleResult {
  std::vector<double> times;
  std::vector<std::string> observables;
  std::vector<std::vector<MomentAccumulator>> stats;  // [observable][time]
  std::vector<std::vector<std::vector<MomentAccumulator>>> group_stats;  // [group][observable][time]
  std::vector<std::uint64_t> diverged;                // cumulative count per time
  int trajectories = 0;
  bool unreliable = false;

  std::size_t index_of(const std::string& name) const;
  cplx mean(std::size_t observable, std::size_t time) const { return stats[observable][time].mean(); }
  cplx error(std::size_t observable, std::size_t time) const {
    return stats[observable][time].error();
  }
};

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

/// Delete-one-group jackknife of a function of all observable means at one time.
/// Needs a result produced with config.groups >= 2.
Estimate jackknife(const EnsembleResult& result, std::size_t time,
                   const std::function<double(std::span<const cplx>)>& estimator);

/// Converts measurement times to step counts; throws if a time is not a multiple of dt.
std::vector<std::uint32_t> schedule_steps(const std::vector<double>& times, double dt);

template <class Trajectory>
EnsembleResult run_ensemble(const EnsembleProblem<Trajectory>& problem, const EnsembleConfig& config) {
  require(config.trajectories >= 2, "run_ensemble: need at least 2 trajectories");
  require(config.dt > 0.0, "run_ensemble: dt must be positive");
  require(!config.times.empty(), "run_ensemble: no measurement times");
  require(config.groups >= 1 && config.groups <= config.trajectories,
          "run_ensemble: groups must lie in [1, trajectories]");
  const auto schedule = schedule_steps(config.times, config.dt);
  const std::size_t n_obs = problem.observables.size();
  const std::size_t n_times = config.times.size();
  const auto n_groups = static_cast<std::size_t>(config.groups);

  struct Partial {
    std::vector<std::vector<std::vector<MomentAccumulator>>> stats;  // [group][obs][time]
    std::vector<std::uint64_t> diverged;
  };
  auto fresh = [&] {
    Partial p;
    p.stats.assign(n_groups, std::vector<std::vector<MomentAccumulator>>(
                                 n_obs, std::vector<MomentAccumulator>(n_times)));
    p.diverged.assign(n_times, 0);
    return p;
  };

  auto run_trajectory = [&](std::uint32_t index, Partial& out) {
    const NoiseStream stream(config.seed, index);
    Trajectory traj = problem.sample(stream);
    std::vector<cplx> values(n_obs);
    auto& stats = out.stats[static_cast<std::uint64_t>(index) * n_groups / config.trajectories];
    std::uint32_t step = 0;
    bool alive = true;
    for (std::size_t k = 0; k < n_times; ++k) {
      while (alive && step < schedule[k]) {
        const double t = step * config.dt;
        if (problem.advance(traj, t, step, stream) != StepStatus::ok) alive = false;
        ++step;
      }
      if (!alive) {
        for (std::size_t j = k; j < n_times; ++j) ++out.diverged[j];
        return;
      }
      const double w = problem.observe(traj, schedule[k] * config.dt, values);
      for (std::size_t o = 0; o < n_obs; ++o) stats[o][k].add(values[o], w);
    }
  };

  const int workers = std::max(1, std::min(config.threads, config.trajectories));
  std::vector<Partial> partials;
  partials.reserve(workers);
  for (int w = 0; w < workers; ++w) partials.push_back(fresh());

  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::atomic<std::uint32_t> next{0};
  auto worker = [&](int w) {
    try {
      if (config.reduction == Reduction::deterministic) {
        const auto n = static_cast<std::uint32_t>(config.trajectories);
        const std::uint32_t begin = n * static_cast<std::uint64_t>(w) / workers;
        const std::uint32_t end = n * static_cast<std::uint64_t>(w + 1) / workers;
        for (std::uint32_t i = begin; i < end; ++i) run_trajectory(i, partials[w]);
      } else {
        for (std::uint32_t i = next++; i < static_cast<std::uint32_t>(config.trajectories); i = next++)
          run_trajectory(i, partials[w]);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  if (workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  EnsembleResult result;
  result.times = config.times;
  result.observables = problem.observables;
  result.trajectories = config.trajectories;
  Partial total = fresh();
  for (const auto& p : partials) {
    for (std::size_t g = 0; g < n_groups; ++g)
      for (std::size_t o = 0; o < n_obs; ++o)
        for (std::size_t k = 0; k < n_times; ++k) total.stats[g][o][k].merge(p.stats[g][o][k]);
    for (std::size_t k = 0; k < n_times; ++k) total.diverged[k] += p.diverged[k];
  }
  result.stats = total.stats[0];
  for (std::size_t g = 1; g < n_groups; ++g)
    for (std::size_t o = 0; o < n_obs; ++o)
      for (std::size_t k = 0; k < n_times; ++k) result.stats[o][k].merge(total.stats[g][o][k]);
  if (n_groups > 1) result.group_stats = std::move(total.stats);
  result.diverged = std::move(total.diverged);
  result.unreliable = static_cast<double>(result.diverged.back()) >
                      config.unreliable_fraction * config.trajectories;
  return result;
}

}  // namespace qdyn
