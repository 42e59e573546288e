#include "qdyn/ensemble.hpp"

#include <cmath>

namespace qdyn {

Reduction parse_reduction(const std::string& name) {
  if (name == "deterministic") return Reduction::deterministic;
  if (name == "fast") return Reduction::fast;
  throw InvalidInput("unknown reduction '" + name + "' (expected deterministic|fast)");
}

std::string to_string(Reduction reduction) {
  return reduction == Reduction::deterministic ? "deterministic" : "fast";
}

std::size_t EnsembleResult::index_of(const std::string& name) const {
  const auto it = std::find(observables.begin(), observables.end(), name);
  require(it != observables.end(), "unknown observable '" + name + "'");
  return static_cast<std::size_t>(it - observables.begin());
}

Estimate jackknife(const EnsembleResult& result, std::size_t time,
                   const std::function<double(std::span<const cplx>)>& estimator) {
  const std::size_t groups = result.group_stats.size();
  require(groups >= 2, "jackknife: result has no group statistics");
  const std::size_t n_obs = result.observables.size();
  std::vector<cplx> means(n_obs);
  for (std::size_t o = 0; o < n_obs; ++o) means[o] = result.mean(o, time);
  Estimate out;
  out.value = estimator(means);
  std::vector<double> leave_out(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t o = 0; o < n_obs; ++o) {
      MomentAccumulator acc;
      for (std::size_t h = 0; h < groups; ++h)
        if (h != g) acc.merge(result.group_stats[h][o][time]);
      means[o] = acc.mean();
    }
    leave_out[g] = estimator(means);
  }
  double average = 0.0;
  for (double v : leave_out) average += v;
  average /= static_cast<double>(groups);
  double spread = 0.0;
  for (double v : leave_out) spread += (v - average) * (v - average);
  out.error = std::sqrt(spread * static_cast<double>(groups - 1) / static_cast<double>(groups));
  return out;
}

std::vector<std::uint32_t> schedule_steps(const std::vector<double>& times, double dt) {
  std::vector<std::uint32_t> steps;
  steps.reserve(times.size());
  double previous = -1.0;
  for (double t : times) {
    require(t >= 0.0, "measurement times must be non-negative");
    require(t > previous, "measurement times must be strictly ascending");
    previous = t;
    const double n = t / dt;
    const double rounded = std::round(n);
    require(std::fabs(n - rounded) <= 1e-6 * std::max(1.0, rounded),
            "measurement time " + std::to_string(t) + " is not a multiple of dt");
    steps.push_back(static_cast<std::uint32_t>(rounded));
  }
  return steps;
}

}  // namespace qdyn
