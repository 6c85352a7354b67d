#include "carhmm/decode.hpp"

#include <cmath>
#include <limits>

#include "carhmm/error.hpp"
#include "carhmm/likelihood.hpp"

namespace carhmm {

std::vector<std::size_t> viterbi_group(const CarHmmModel& model,
                                       const ObservationGroup& group) {
  model.validate();
  const std::size_t k = model.k();
  const std::size_t n = group.obs.size();
  if (n == 0) return {};
  const auto delta = stationary(model.a);
  std::vector<double> table;
  emission_table(model, group, table);

  std::vector<double> log_a(k * k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) log_a[i * k + j] = std::log(model.a(i, j));

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> score(k), next(k);
  std::vector<std::size_t> back(n * k, 0);
  for (std::size_t b = 0; b < k; ++b) score[b] = std::log(delta[b]) + table[b];
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      double best = kNegInf;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < k; ++i) {
        const double v = score[i] + log_a[i * k + j];
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      next[j] = best + table[t * k + j];
      back[t * k + j] = arg;
    }
    score.swap(next);
  }
  double best = kNegInf;
  std::size_t last = 0;
  for (std::size_t b = 0; b < k; ++b) {
    if (score[b] > best) {
      best = score[b];
      last = b;
    }
  }
  if (!std::isfinite(best)) {
    throw Error(ErrorCode::NumericUnderflow, "no state path has positive probability");
  }
  std::vector<std::size_t> path(n);
  path[n - 1] = last;
  for (std::size_t t = n - 1; t > 0; --t) path[t - 1] = back[t * k + path[t]];
  return path;
}

StatePath viterbi(const CarHmmModel& model, const ObservationSeries& series) {
  StatePath out;
  out.reserve(series.groups.size());
  for (const auto& g : series.groups) out.push_back(viterbi_group(model, g));
  return out;
}

double path_log_score(const CarHmmModel& model, const ObservationGroup& group,
                      const std::vector<std::size_t>& path) {
  if (path.size() != group.obs.size()) {
    throw Error(ErrorCode::LengthMismatch, "path length does not match group");
  }
  const auto delta = stationary(model.a);
  std::vector<double> table;
  emission_table(model, group, table);
  const std::size_t k = model.k();
  double s = 0.0;
  for (std::size_t t = 0; t < path.size(); ++t) {
    s += (t == 0 ? std::log(delta[path[0]]) : std::log(model.a(path[t - 1], path[t])));
    s += table[t * k + path[t]];
  }
  return s;
}

std::vector<std::vector<double>> filtered_predictive(const CarHmmModel& model,
                                                     const ObservationGroup& group) {
  const std::size_t k = model.k();
  const auto filter = forward_filter(model, group);
  std::vector<std::vector<double>> out;
  out.reserve(group.obs.size());
  if (group.obs.empty()) return out;
  out.push_back(stationary(model.a));
  for (std::size_t t = 1; t < group.obs.size(); ++t) {
    const auto& alpha = filter[t - 1].alpha;
    std::vector<double> p(k, 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < k; ++i) p[j] += alpha[i] * model.a(i, j);
      total += p[j];
    }
    for (double& v : p) v /= total;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace carhmm
