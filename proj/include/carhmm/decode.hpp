#pragma once

#include <cstddef>
#include <vector>

#include "carhmm/model.hpp"
#include "carhmm/series.hpp"

namespace carhmm {

/// Decoded states per group, one per observation pair. Labels are 0-based
/// here; the CLI writes them 1-based.
using StatePath = std::vector<std::vector<std::size_t>>;

/// Most likely state sequence of one group (log-space Viterbi). Ties go to
/// the lower state index.
std::vector<std::size_t> viterbi_group(const CarHmmModel& model,
                                       const ObservationGroup& group);
StatePath viterbi(const CarHmmModel& model, const ObservationSeries& series);

/// Log of delta_{b1} f_1(b1) prod_t a_{b(t-1) b(t)} f_t(b_t) for a given path.
double path_log_score(const CarHmmModel& model, const ObservationGroup& group,
                      const std::vector<std::size_t>& path);

/// P(B_t | observations before t) for each t of one group: delta at t = 1,
/// then the normalized alpha_(t-1) A.
std::vector<std::vector<double>> filtered_predictive(const CarHmmModel& model,
                                                     const ObservationGroup& group);

}  // namespace carhmm
