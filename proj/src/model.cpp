#include "carhmm/model.hpp"

#include <cmath>

#include "carhmm/error.hpp"
#include "carhmm/geo.hpp"

namespace carhmm {

std::string_view to_string(Family f) {
  return f == Family::gamma ? "gamma" : "lognormal";
}

Family parse_family(std::string_view s) {
  if (s == "gamma") return Family::gamma;
  if (s == "lognormal") return Family::lognormal;
  throw Error(ErrorCode::SchemaMismatch, "unknown family '" + std::string(s) + "'");
}

namespace {

std::string describe(const CarHmmModel& m) {
  if (m.states.empty()) return "model has no states";
  if (m.a.k() != m.states.size()) return "transition matrix size does not match k";
  if (!m.a.is_stochastic()) return "transition matrix rows must sum to 1";
  for (std::size_t b = 0; b < m.states.size(); ++b) {
    const auto& s = m.states[b];
    const std::string where = "state " + std::to_string(b + 1) + ": ";
    if (!std::isfinite(s.mu_rl) || !std::isfinite(s.phi) || !std::isfinite(s.sigma) ||
        !std::isfinite(s.c) || !std::isfinite(s.rho)) {
      return where + "non-finite parameter";
    }
    if (!(s.sigma > 0.0)) return where + "sigma must be > 0";
    if (!(s.rho > 0.0 && s.rho < 1.0)) return where + "rho must be in (0,1)";
    if (s.c < -geo::kPi || s.c > geo::kPi) return where + "c must be in [-pi,pi]";
    if (m.family == Family::gamma) {
      if (!(s.mu_rl > 0.0)) return where + "mu_rl must be > 0";
      if (!(s.phi >= 0.0 && s.phi < 1.0)) return where + "phi must be in [0,1)";
    }
  }
  return {};
}

}  // namespace

void CarHmmModel::validate() const {
  const std::string why = describe(*this);
  if (!why.empty()) throw Error(ErrorCode::InvalidModel, why);
}

bool CarHmmModel::is_valid() const noexcept { return describe(*this).empty(); }

std::size_t parameter_count(std::size_t k, bool phi_fixed_zero) {
  return k * k + (phi_fixed_zero ? 3 : 4) * k;
}

CarHmmModel permute_states(const CarHmmModel& m, const std::vector<std::size_t>& perm) {
  CarHmmModel out;
  out.family = m.family;
  const std::size_t k = m.k();
  out.a = TransitionMatrix(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.states.push_back(m.states[perm[i]]);
    for (std::size_t j = 0; j < k; ++j) out.a(i, j) = m.a(perm[i], perm[j]);
  }
  return out;
}

namespace presets {

namespace {

CarHmmModel make(const std::vector<double>& mu, const std::vector<double>& phi,
                 const std::vector<double>& sigma, const std::vector<double>& c,
                 const std::vector<double>& rho, std::vector<std::vector<double>> a) {
  CarHmmModel m;
  for (std::size_t b = 0; b < mu.size(); ++b) {
    m.states.push_back({mu[b], phi[b], sigma[b], c[b], rho[b]});
  }
  for (auto& row : a) {
    double s = 0.0;
    for (double v : row) s += v;
    for (double& v : row) v /= s;
  }
  m.a = TransitionMatrix(a);
  return m;
}

}  // namespace

CarHmmModel seal_three_state() {
  return make({0.398, 1.291, 2.074}, {0.277, 0.781, 0.961}, {0.279, 0.318, 0.164},
              {-0.129, -0.050, 0.002}, {0.402, 0.780, 0.906},
              {{0.713, 0.287, 0.000}, {0.149, 0.797, 0.054}, {0.000, 0.120, 0.880}});
}

CarHmmModel elk_two_state(double phi1, double phi2) {
  return make({3.364, 0.355}, {phi1, phi2}, {4.329, 0.378}, {0.0, 0.0}, {0.228, 0.6},
              {{0.75, 0.25}, {0.15, 0.85}});
}

CarHmmModel seal_length_study() {
  // Printed rows sum to 0.995 / 0.983 / 1.0 and are renormalized here.
  return make({0.202, 0.998, 2.091}, {0.04, 0.429, 0.945}, {0.157, 0.529, 0.235},
              {0.0, 0.0, 0.0}, {0.209, 0.681, 0.867},
              {{0.848, 0.142, 0.005}, {0.065, 0.754, 0.164}, {0.005, 0.164, 0.831}});
}

CarHmmModel seal_two_state(double stay1, double stay2) {
  return make({0.552, 1.731}, {0.407, 0.892}, {0.351, 0.244}, {0.0, 0.0}, {0.508, 0.858},
              {{stay1, 1.0 - stay1}, {1.0 - stay2, stay2}});
}

}  // namespace presets

}  // namespace carhmm
