#include "carhmm/fit.hpp"

#include <ceres/ceres.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "carhmm/error.hpp"
#include "carhmm/geo.hpp"
#include "carhmm/likelihood.hpp"

namespace carhmm {

namespace {

constexpr std::size_t kPerState = 5;
constexpr int kPolishRounds = 4;
constexpr double kPolishGradient = 1e-5;
constexpr double kHessianStep = 1e-4;
constexpr double kFlatDirection = 1e-7;

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }
double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double u) {
  return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

std::vector<bool> free_mask(std::size_t k, bool phi_fixed_zero) {
  std::vector<bool> mask(parameter_count(k), true);
  if (phi_fixed_zero) {
    for (std::size_t b = 0; b < k; ++b) mask[b * kPerState + 1] = false;
  }
  return mask;
}

}  // namespace

std::string_view to_string(DegeneracyReason r) {
  switch (r) {
    case DegeneracyReason::StationaryEntry: return "StationaryEntry";
    case DegeneracyReason::AngleConcentration: return "AngleConcentration";
    case DegeneracyReason::UniformRow: return "UniformRow";
  }
  return "Unknown";
}

UnconstrainedVector transform(const CarHmmModel& model) {
  model.validate();
  const std::size_t k = model.k();
  UnconstrainedVector v;
  v.reserve(parameter_count(k));
  for (const auto& s : model.states) {
    if (model.family == Family::gamma) {
      v.push_back(std::log(s.mu_rl));
      v.push_back(logit(clamp_prob(s.phi / kPhiMax)));
    } else {
      v.push_back(s.mu_rl);
      v.push_back(s.phi);
    }
    v.push_back(std::log(s.sigma));
    const double c = std::clamp(s.c, -geo::kPi + kProbClamp, geo::kPi - kProbClamp);
    v.push_back(std::tan(0.5 * c));
    v.push_back(logit(clamp_prob(s.rho)));
  }
  for (std::size_t i = 0; i < k; ++i) {
    const double diag = std::max(model.a(i, i), kProbClamp);
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      v.push_back(std::log(std::max(model.a(i, j), kProbClamp) / diag));
    }
  }
  return v;
}

CarHmmModel untransform(const UnconstrainedVector& v, std::size_t k, Family family,
                        bool phi_fixed_zero) {
  if (v.size() != parameter_count(k)) {
    throw Error(ErrorCode::LengthMismatch, "unconstrained vector has wrong length");
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (phi_fixed_zero && i < k * kPerState && i % kPerState == 1) continue;
    if (!std::isfinite(v[i])) {
      throw Error(ErrorCode::NonFinite, "unconstrained parameter " + std::to_string(i));
    }
  }
  CarHmmModel m;
  m.family = family;
  m.states.resize(k);
  for (std::size_t b = 0; b < k; ++b) {
    const double* p = &v[b * kPerState];
    auto& s = m.states[b];
    if (family == Family::gamma) {
      s.mu_rl = std::exp(p[0]);
      s.phi = phi_fixed_zero ? 0.0 : kPhiMax * sigmoid(p[1]);
    } else {
      s.mu_rl = p[0];
      s.phi = phi_fixed_zero ? 0.0 : p[1];
    }
    s.sigma = std::exp(p[2]);
    s.c = 2.0 * std::atan(p[3]);
    s.rho = std::clamp(sigmoid(p[4]), 1e-12, 1.0 - 1e-12);
  }
  m.a = TransitionMatrix(k);
  const double* eta = v.data() + k * kPerState;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> logits(k, 0.0);
    for (std::size_t j = 0, n = 0; j < k; ++j) {
      if (j != i) logits[j] = eta[i * (k - 1) + n++];
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& x : logits) {
      x = std::exp(x - mx);
      total += x;
    }
    for (std::size_t j = 0; j < k; ++j) m.a(i, j) = logits[j] / total;
  }
  return m;
}

std::optional<DegeneracyReason> degeneracy_check(const CarHmmModel& model) {
  std::vector<double> delta;
  try {
    delta = stationary(model.a);
  } catch (const Error&) {
    return DegeneracyReason::StationaryEntry;
  }
  if (*std::min_element(delta.begin(), delta.end()) < 0.01) {
    return DegeneracyReason::StationaryEntry;
  }
  for (const auto& s : model.states) {
    if (s.rho < 1e-3) return DegeneracyReason::AngleConcentration;
  }
  const std::size_t k = model.k();
  for (std::size_t i = 0; i < k; ++i) {
    double lo = model.a(i, 0), hi = model.a(i, 0);
    for (std::size_t j = 1; j < k; ++j) {
      lo = std::min(lo, model.a(i, j));
      hi = std::max(hi, model.a(i, j));
    }
    if (k > 1 && hi - lo < 1e-6) return DegeneracyReason::UniformRow;
  }
  return std::nullopt;
}

std::vector<std::size_t> state_order(const CarHmmModel& model) {
  std::vector<std::size_t> perm(model.k());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t x, std::size_t y) {
    return model.states[x].mu_rl < model.states[y].mu_rl;
  });
  return perm;
}

CarHmmModel order_states(const CarHmmModel& model) {
  return permute_states(model, state_order(model));
}

double bic(double loglik, std::size_t n_params, std::size_t n_obs) {
  return -2.0 * loglik +
         std::log(static_cast<double>(n_obs)) * static_cast<double>(n_params);
}

UnconstrainedVector random_start(std::size_t k, const FitConfig& config, Rng& rng) {
  UnconstrainedVector v;
  v.reserve(parameter_count(k));
  for (std::size_t b = 0; b < k; ++b) {
    const double log_mu = rng.uniform(std::log(0.1), std::log(3.0));
    const double logit_phi = rng.uniform(-2.0, 2.0);
    const double log_sigma = rng.uniform(std::log(0.1), std::log(1.0));
    const double logit_rho = rng.uniform(-1.0, 1.0);
    if (config.family == Family::gamma) {
      v.push_back(log_mu);
      v.push_back(config.fix_phi_zero ? 0.0 : logit_phi);
    } else {
      v.push_back(log_mu);
      v.push_back(config.fix_phi_zero ? 0.0 : sigmoid(logit_phi));
    }
    v.push_back(log_sigma);
    v.push_back(0.0);  // c = 0
    v.push_back(logit_rho);
  }
  for (std::size_t i = 0; i < k * (k - 1); ++i) v.push_back(rng.uniform(-2.0, 0.0));
  return v;
}

double objective(const UnconstrainedVector& v, const ObservationSeries& series,
                 std::size_t k, const FitConfig& config) {
  try {
    const auto m = untransform(v, k, config.family, config.fix_phi_zero);
    const double ll = total_loglik(m, series);
    return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

std::vector<double> objective_gradient(const UnconstrainedVector& v,
                                       const ObservationSeries& series, std::size_t k,
                                       const FitConfig& config) {
  const auto mask = free_mask(k, config.fix_phi_zero);
  std::vector<double> g(v.size(), 0.0);
  UnconstrainedVector x = v;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!mask[i]) continue;
    const double h = config.fd_relative_step * std::max(1.0, std::abs(v[i]));
    x[i] = v[i] + h;
    const double fp = objective(x, series, k, config);
    x[i] = v[i] - h;
    const double fm = objective(x, series, k, config);
    x[i] = v[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

namespace {

class NegLogLik final : public ceres::FirstOrderFunction {
 public:
  NegLogLik(const ObservationSeries& series, std::size_t k, const FitConfig& config,
            UnconstrainedVector base)
      : series_(series), k_(k), config_(config), base_(std::move(base)) {
    const auto mask = free_mask(k, config.fix_phi_zero);
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) free_.push_back(i);
  }

  int NumParameters() const override { return static_cast<int>(free_.size()); }

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const UnconstrainedVector full = expand(parameters);
    const double f = objective(full, series_, k_, config_);
    if (!std::isfinite(f)) return false;
    *cost = f;
    if (gradient != nullptr) {
      const auto g = objective_gradient(full, series_, k_, config_);
      for (std::size_t i = 0; i < free_.size(); ++i) {
        if (!std::isfinite(g[free_[i]])) return false;
        gradient[i] = g[free_[i]];
      }
    }
    return true;
  }

  UnconstrainedVector expand(const double* parameters) const {
    UnconstrainedVector full = base_;
    for (std::size_t i = 0; i < free_.size(); ++i) full[free_[i]] = parameters[i];
    return full;
  }

  const std::vector<std::size_t>& free_indices() const { return free_; }

  double cost(const double* parameters) const {
    return objective(expand(parameters), series_, k_, config_);
  }

  std::vector<double> free_gradient(const double* parameters) const {
    const auto g = objective_gradient(expand(parameters), series_, k_, config_);
    std::vector<double> out;
    for (std::size_t i : free_) out.push_back(g[i]);
    return out;
  }

 private:
  const ObservationSeries& series_;
  std::size_t k_;
  FitConfig config_;
  UnconstrainedVector base_;
  std::vector<std::size_t> free_;
};

void newton_polish(const NegLogLik& fn, std::vector<double>& x) {
  const std::size_t p = x.size();
  double f = fn.cost(x.data());
  std::vector<double> g = fn.free_gradient(x.data());
  for (int round = 0; round < kPolishRounds && max_abs(g) > kPolishGradient; ++round) {
    Eigen::MatrixXd h(p, p);
    std::vector<double> y = x;
    for (std::size_t j = 0; j < p; ++j) {
      const double step = kHessianStep * std::max(1.0, std::abs(x[j]));
      y[j] = x[j] + step;
      const auto gp = fn.free_gradient(y.data());
      y[j] = x[j] - step;
      const auto gm = fn.free_gradient(y.data());
      y[j] = x[j];
      for (std::size_t i = 0; i < p; ++i) h(i, j) = (gp[i] - gm[i]) / (2.0 * step);
    }
    const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) return;
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double top = lambda.cwiseAbs().maxCoeff();
    if (!(top > 0.0) || lambda.minCoeff() < -kFlatDirection * top) return;
    // Directions with negligible curvature (parameters pinned at a clamp) are
    // left alone.
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(p));
    Eigen::VectorXd proj = eig.eigenvectors().transpose() * gv;
    for (Eigen::Index i = 0; i < proj.size(); ++i) {
      proj(i) = lambda(i) > kFlatDirection * top ? proj(i) / lambda(i) : 0.0;
    }
    const Eigen::VectorXd delta = eig.eigenvectors() * proj;
    std::vector<double> trial(p);
    for (std::size_t i = 0; i < p; ++i) trial[i] = x[i] - delta(static_cast<Eigen::Index>(i));
    const double ft = fn.cost(trial.data());
    if (!std::isfinite(ft) || ft > f + 64.0 * std::numeric_limits<double>::epsilon() * std::abs(f))
      return;
    auto gt = fn.free_gradient(trial.data());
    if (!(max_abs(gt) < max_abs(g))) return;
    x = std::move(trial);
    f = ft;
    g = std::move(gt);
  }
}

}  // namespace

FitResult fit_once(const ObservationSeries& series, std::size_t k,
                   const UnconstrainedVector& start, const FitConfig& config) {
  if (series.n_pairs() == 0) {
    throw Error(ErrorCode::AllGroupsDegenerate, "series has no observation pairs");
  }
  if (start.size() != parameter_count(k)) {
    throw Error(ErrorCode::LengthMismatch, "start vector has wrong length");
  }
  if (!std::isfinite(objective(start, series, k, config))) {
    throw Error(ErrorCode::NonFiniteObjective, "objective is not finite at the start");
  }

  auto* fn = new NegLogLik(series, k, config, start);
  std::vector<double> x;
  for (std::size_t i : fn->free_indices()) x.push_back(start[i]);
  ceres::GradientProblem problem(fn);  // takes ownership

  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::BFGS;
  options.line_search_type = ceres::WOLFE;
  options.max_num_iterations = config.max_iterations;
  options.gradient_tolerance = config.gradient_tolerance;
  options.function_tolerance = config.function_tolerance;
  options.parameter_tolerance = 1e-300;
  options.logging_type = ceres::SILENT;
  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(options, problem, x.data(), &summary);
  int iterations = static_cast<int>(summary.iterations.size());
  // Near the optimum the cost differences BFGS relies on reach rounding
  // level; Newton steps on a finite-difference Hessian of the gradient finish
  // the descent. A step is kept only if the cost does not rise beyond rounding
  // and the gradient shrinks.
  if (summary.termination_type == ceres::CONVERGENCE) {
    newton_polish(*fn, x);
  }

  FitResult r;
  const UnconstrainedVector best = fn->expand(x.data());
  const CarHmmModel model = untransform(best, k, config.family, config.fix_phi_zero);
  r.model = order_states(model);
  r.loglik = -objective(best, series, k, config);
  r.converged = summary.termination_type == ceres::CONVERGENCE && std::isfinite(r.loglik);
  r.iterations = iterations;
  const auto g = objective_gradient(best, series, k, config);
  for (double gi : g) r.gradient_max_norm = std::max(r.gradient_max_norm, std::abs(gi));
  r.termination = summary.message;
  r.n_parameters = parameter_count(k, config.fix_phi_zero);
  r.n_observations = series.n_pairs();
  r.aic = aic(r.loglik, r.n_parameters);
  r.bic = bic(r.loglik, r.n_parameters, r.n_observations);
  r.degenerate = degeneracy_check(r.model);
  r.restarts_used = 1;
  return r;
}

FitResult fit_multistart(const ObservationSeries& series, std::size_t k,
                         const FitConfig& config) {
  std::optional<FitResult> best;
  for (int r = 0; r < config.max_restarts; ++r) {
    Rng rng = Rng::derive(config.seed, static_cast<std::uint64_t>(r));
    const auto start = random_start(k, config, rng);
    FitResult res;
    try {
      res = fit_once(series, k, start, config);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonFiniteObjective) continue;
      throw;
    }
    res.restarts_used = r + 1;
    if (res.converged && !res.degenerate) return res;
    if (std::isfinite(res.loglik) && (!best || res.loglik > best->loglik)) {
      best = std::move(res);
    }
  }
  if (!best) {
    throw Error(ErrorCode::AllRestartsFailed, "no restart produced a finite objective");
  }
  best->restarts_used = config.max_restarts;
  return *best;
}

}  // namespace carhmm
