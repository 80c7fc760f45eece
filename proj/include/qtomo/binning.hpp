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

// Coarse graining of the outcome space into contiguous bins chosen greedily to
// keep mutual information with the hidden subspace outcome.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qtomo/iontrap.hpp"
#include "qtomo/random.hpp"

namespace qtomo {

/// Bin edges 0 = B_0 < B_1 < ... < B_G = M. Zero-based outcome b belongs to bin
/// c (zero-based) iff B_c <= b < B_{c+1}, i.e. one-based b+1 is in (B_c, B_{c+1}].
class BinRule {
 public:
  BinRule() = default;
  explicit BinRule(std::vector<int> edges) : edges_(std::move(edges)) {
    if (edges_.size() < 2) throw InvariantError("BinRule: need at least two edges");
    if (edges_.front() != 0) throw InvariantError("BinRule: first edge must be 0");
    for (std::size_t c = 1; c < edges_.size(); ++c) {
      if (edges_[c] <= edges_[c - 1]) throw InvariantError("BinRule: edges must be strictly increasing");
    }
  }

  static BinRule identity(int outcomes) {
    std::vector<int> e(static_cast<std::size_t>(outcomes) + 1);
    for (int b = 0; b <= outcomes; ++b) e[static_cast<std::size_t>(b)] = b;
    return BinRule(std::move(e));
  }

  const std::vector<int>& edges() const { return edges_; }
  int bins() const { return static_cast<int>(edges_.size()) - 1; }
  int outcomes() const { return edges_.back(); }

  int bin_of(int outcome) const {
    for (int c = 0; c < bins(); ++c) {
      if (outcome < edges_[static_cast<std::size_t>(c) + 1]) return c;
    }
    throw std::out_of_range("BinRule: outcome beyond last edge");
  }

  bool operator==(const BinRule&) const = default;

 private:
  std::vector<int> edges_;
};

/// Joint distribution P(k, c) over hidden outcome k (rows) and bin c (columns).
class JointDistribution {
 public:
  explicit JointDistribution(RMatrix p) : p_(std::move(p)) {
    if (p_.size() == 0) throw InvariantError("JointDistribution: empty");
    if (p_.minCoeff() < 0.0) throw InvariantError("JointDistribution: negative entry");
    if (std::abs(p_.sum() - 1.0) > 1e-10) throw InvariantError("JointDistribution: does not sum to 1");
  }
  const RMatrix& matrix() const { return p_; }

 private:
  RMatrix p_;
};

// ---------------------------------------------------------------------------

/// Moves round(fraction * trials) trials of every reference experiment (state
/// family 0) into a training set, drawing individual trials without
/// replacement. Other families go to the remainder untouched.
inline std::pair<HistogramSet, HistogramSet> split_training_set(const HistogramSet& h, double fraction,
                                                                std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split_training_set: fraction must be in (0,1)");
  if (h.states() == 0) throw std::invalid_argument("split_training_set: empty histogram set");
  const CountMatrix& ref = h.counts.front();
  CountMatrix train = CountMatrix::Zero(ref.rows(), ref.cols());
  CountMatrix rest = ref;
  for (Eigen::Index i = 0; i < ref.rows(); ++i) {
    const std::int64_t total = ref.row(i).sum();
    const auto take = static_cast<std::int64_t>(std::llround(fraction * static_cast<double>(total)));
    if (take <= 0) throw std::invalid_argument("split_training_set: fraction yields zero training trials");
    Rng rng(derive_seed(seed, {seed_stage::kTrainingSplit, static_cast<std::uint64_t>(i)}));
    std::int64_t left = total;
    for (std::int64_t t = 0; t < take; ++t) {
      std::uniform_int_distribution<std::int64_t> pick(0, left - 1);
      std::int64_t u = pick(rng);
      Eigen::Index b = 0;
      while (u >= rest(i, b)) {
        u -= rest(i, b);
        ++b;
      }
      --rest(i, b);
      ++train(i, b);
      --left;
    }
  }
  HistogramSet training;
  training.counts.push_back(std::move(train));
  HistogramSet remainder = h;
  remainder.counts.front() = std::move(rest);
  return {std::move(training), std::move(remainder)};
}

/// I(K;C) in bits, with 0 log 0 = 0.
inline double mutual_information(const JointDistribution& joint) {
  const RMatrix& p = joint.matrix();
  const RVector pk = p.rowwise().sum();
  const Eigen::RowVectorXd pc = p.colwise().sum();
  double info = 0.0;
  for (Eigen::Index k = 0; k < p.rows(); ++k) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      const double v = p(k, c);
      if (v > 0.0) info += v * std::log2(v / (pk(k) * pc(c)));
    }
  }
  return std::max(0.0, info);
}

/// P(k, c) = Q(k, c) / N: every hidden outcome equally likely.
inline JointDistribution equalized_joint(const TransitionMatrix& q) {
  return JointDistribution(q.matrix() / static_cast<double>(q.subspaces()));
}

inline RMatrix bin_columns(const RMatrix& m, const BinRule& rule) {
  if (rule.outcomes() != m.cols()) throw DimensionError("bin rule does not cover the outcome space");
  RMatrix out = RMatrix::Zero(m.rows(), rule.bins());
  for (int c = 0; c < rule.bins(); ++c) {
    const int lo = rule.edges()[static_cast<std::size_t>(c)];
    const int hi = rule.edges()[static_cast<std::size_t>(c) + 1];
    out.col(c) = m.middleCols(lo, hi - lo).rowwise().sum();
  }
  return out;
}

inline TransitionMatrix apply_binning_transition(const TransitionMatrix& q, const BinRule& rule) {
  return TransitionMatrix::clipped(bin_columns(q.matrix(), rule));
}

inline HistogramSet apply_binning_histogram(const HistogramSet& h, const BinRule& rule) {
  HistogramSet out;
  for (const auto& counts : h.counts) {
    if (rule.outcomes() != counts.cols()) throw DimensionError("bin rule does not cover the outcome space");
    CountMatrix binned = CountMatrix::Zero(counts.rows(), rule.bins());
    for (int c = 0; c < rule.bins(); ++c) {
      const int lo = rule.edges()[static_cast<std::size_t>(c)];
      const int hi = rule.edges()[static_cast<std::size_t>(c) + 1];
      binned.col(c) = counts.middleCols(lo, hi - lo).rowwise().sum();
    }
    out.counts.push_back(std::move(binned));
  }
  return out;
}

/// Greedy edge insertion: from {0, M}, repeatedly add the interior edge that
/// maximizes I(K;C) of the equalized joint, keeping earlier edges fixed. Ties
/// within 1e-12 go to the smallest position. If mi_trace is given it receives
/// the mutual information after each insertion (first entry: the single bin).
inline BinRule greedy_bin_edges(const TransitionMatrix& q_train, int target_bins,
                                std::vector<double>* mi_trace = nullptr) {
  const int m = static_cast<int>(q_train.outcomes());
  if (target_bins < 1) throw std::invalid_argument("greedy_bin_edges: target bins must be >= 1");
  if (target_bins > m) throw std::invalid_argument("greedy_bin_edges: more bins than outcomes");
  std::vector<int> edges{0, m};
  auto info_for = [&](const std::vector<int>& e) {
    return mutual_information(equalized_joint(apply_binning_transition(q_train, BinRule(e))));
  };
  if (mi_trace) mi_trace->assign(1, info_for(edges));
  while (static_cast<int>(edges.size()) < target_bins + 1) {
    int best_pos = -1;
    double best_info = -1.0;
    std::vector<int> best_edges;
    for (int pos = 1; pos < m; ++pos) {
      if (std::find(edges.begin(), edges.end(), pos) != edges.end()) continue;
      std::vector<int> trial = edges;
      trial.insert(std::upper_bound(trial.begin(), trial.end(), pos), pos);
      const double info = info_for(trial);
      if (info > best_info + 1e-12) {
        best_info = info;
        best_pos = pos;
        best_edges = std::move(trial);
      }
    }
    if (best_pos < 0) break;
    edges = std::move(best_edges);
    if (mi_trace) mi_trace->push_back(best_info);
  }
  return BinRule(std::move(edges));
}

}  // namespace qtomo
