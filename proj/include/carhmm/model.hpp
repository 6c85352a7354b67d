#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "carhmm/markov.hpp"

namespace carhmm {

enum class Family { gamma, lognormal };

std::string_view to_string(Family f);
/// Throws SchemaMismatch for anything but "gamma" / "lognormal".
Family parse_family(std::string_view s);

/// Per-state emission parameters: AR(1) step process reverting to mu_rl with
/// autocorrelation phi and spread sigma; wrapped Cauchy angles (c, rho).
/// For the log-normal family mu_rl and the AR act on log-steps.
struct StateParams {
  double mu_rl = 1.0;
  double phi = 0.0;
  double sigma = 1.0;
  double c = 0.0;
  double rho = 0.5;

  friend bool operator==(const StateParams&, const StateParams&) = default;
};

struct CarHmmModel {
  Family family = Family::gamma;
  std::vector<StateParams> states;
  TransitionMatrix a;

  std::size_t k() const noexcept { return states.size(); }

  /// Throws InvalidModel when any family constraint is violated.
  void validate() const;
  bool is_valid() const noexcept;

  friend bool operator==(const CarHmmModel&, const CarHmmModel&) = default;
};

/// k^2 + 4k with all parameters free; k^2 + 3k with phi fixed at zero.
std::size_t parameter_count(std::size_t k, bool phi_fixed_zero = false);

/// Applies a state permutation: new state i is old state perm[i].
CarHmmModel permute_states(const CarHmmModel& m, const std::vector<std::size_t>& perm);

/// Reference parameter sets used by the simulation studies.
namespace presets {

/// Three-state CarHMM estimated for the best-practice grey seal track.
CarHmmModel seal_three_state();
/// Two-state elk HMM; phi1/phi2 set the per-state autocorrelation
/// (the low/medium/high grid uses 0.1/0.4/0.85).
CarHmmModel elk_two_state(double phi1 = 0.0, double phi2 = 0.0);
/// Three-state seal parameters for the track-length study (rows renormalized).
CarHmmModel seal_length_study();
/// Two-state seal parameters with caller-chosen diagonal stay probabilities.
CarHmmModel seal_two_state(double stay1 = 0.826, double stay2 = 0.88);

inline constexpr double kElkLow = 0.1;
inline constexpr double kElkMedium = 0.4;
inline constexpr double kElkHigh = 0.85;

}  // namespace presets

}  // namespace carhmm
