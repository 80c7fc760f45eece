// Copyright 2026 The qtomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Fit stage shared by the command-line tool and the tests: training split,
// greedy binning, initial Q and the alternating fit.

#pragma once

#include <cstdint>
#include <vector>

#include "qtomo/binning.hpp"
#include "qtomo/estimator.hpp"
#include "qtomo/iontrap.hpp"

namespace qtomo {

struct FitSettings {
  int bins = 8;
  double training_fraction = 0.1;
  SolverOptions solver;
};

struct FitResult {
  HistogramSet training;
  HistogramSet remainder;
  TransitionMatrix q_training;  // pseudo-inverse estimate from the training rows, unbinned
  std::vector<double> mi_trace;
  BinRule rule;
  HistogramSet binned;
  TransitionMatrix q_init;
  Estimate estimate;
};

/// bins >= outcomes skips the training split and uses the identity rule.
inline FitResult fit_histograms(const HistogramSet& raw, const MeasurementModel& model, const FitSettings& s,
                                std::uint64_t seed) {
  FitResult r;
  const RMatrix pops = population_matrix(model);
  const auto outcomes = static_cast<int>(raw.outcomes());
  if (s.bins >= outcomes) {
    r.remainder = raw;
    r.rule = BinRule::identity(outcomes);
  } else {
    auto [training, remainder] = split_training_set(raw, s.training_fraction, seed);
    r.training = std::move(training);
    r.remainder = std::move(remainder);
    r.q_training = init_transition(r.training.as_weights().front(), pops);
    r.rule = greedy_bin_edges(r.q_training, s.bins, &r.mi_trace);
  }
  r.binned = apply_binning_histogram(r.remainder, r.rule);
  const auto w = r.binned.as_weights();
  r.q_init = init_transition(w.front(), pops);
  r.estimate = alternate(w, model, r.q_init, s.solver);
  return r;
}

}  // namespace qtomo
