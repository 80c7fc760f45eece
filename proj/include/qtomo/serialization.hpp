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

// JSON encoding of the pipeline types and the run configuration schema.
//
// Complex numbers are [re, im] pairs (plain numbers are accepted on input as
// real), matrices are arrays of rows. Doubles are written in shortest
// round-trip form.

#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtomo/binning.hpp"
#include "qtomo/bounds.hpp"
#include "qtomo/estimator.hpp"
#include "qtomo/iontrap.hpp"
#include "qtomo/pipeline.hpp"
#include "qtomo/uncertainty.hpp"

namespace qtomo {

using Json = nlohmann::ordered_json;

/// Invalid configuration or input document; `path` locates the field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// %.17g; enough digits to round-trip any double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// field access with paths

namespace json_detail {

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
inline std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline const Json& require(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(join(path, key), "missing required field");
  return *it;
}

inline const Json* optional(const Json& j, const std::string& key) {
  if (!j.is_object()) return nullptr;
  const auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

inline std::int64_t integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<std::int64_t>();
}

inline const Json& array(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  return j;
}

inline std::string string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

}  // namespace json_detail

// ---------------------------------------------------------------------------
// matrices

inline Json complex_to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const Json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ConfigError(path, "expected a number or an [re, im] pair");
}

inline Json to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const RMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const CountMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace json_detail {

template <typename Entry>
auto table(const Json& j, const std::string& path, Entry&& entry) {
  array(j, path);
  if (j.empty()) throw ConfigError(path, "empty matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(array(j[0], index(path, 0)).size());
  if (cols == 0) throw ConfigError(path, "empty matrix row");
  using Value = decltype(entry(j[0], path));
  Eigen::Matrix<Value, Eigen::Dynamic, Eigen::Dynamic> out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto rp = index(path, static_cast<std::size_t>(r));
    const Json& row = array(j[static_cast<std::size_t>(r)], rp);
    if (static_cast<Eigen::Index>(row.size()) != cols) throw ConfigError(rp, "ragged matrix row");
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = entry(row[static_cast<std::size_t>(c)], index(rp, static_cast<std::size_t>(c)));
  }
  return out;
}

}  // namespace json_detail

inline CMatrix cmatrix_from_json(const Json& j, const std::string& path) {
  return json_detail::table(j, path, complex_from_json);
}

inline RMatrix rmatrix_from_json(const Json& j, const std::string& path) {
  return json_detail::table(j, path, json_detail::number);
}

inline CountMatrix counts_from_json(const Json& j, const std::string& path) {
  CountMatrix m = json_detail::table(j, path, json_detail::integer);
  if (m.minCoeff() < 0) throw ConfigError(path, "negative count");
  return m;
}

inline CVector cvector_from_json(const Json& j, const std::string& path) {
  json_detail::array(j, path);
  if (j.empty()) throw ConfigError(path, "empty vector");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = complex_from_json(j[k], json_detail::index(path, k));
  return v;
}

// ---------------------------------------------------------------------------
// pipeline types

inline Json to_json(const HistogramSet& h) {
  Json fam = Json::array();
  for (const auto& c : h.counts) fam.push_back(to_json(c));
  return Json{{"counts", std::move(fam)}};
}

inline HistogramSet histograms_from_json(const Json& j, const std::string& path = "histograms") {
  const Json& fam = json_detail::array(json_detail::require(j, "counts", path), json_detail::join(path, "counts"));
  HistogramSet h;
  for (std::size_t k = 0; k < fam.size(); ++k) {
    h.counts.push_back(counts_from_json(fam[k], json_detail::index(json_detail::join(path, "counts"), k)));
    if (h.counts.back().rows() != h.counts.front().rows() || h.counts.back().cols() != h.counts.front().cols()) {
      throw ConfigError(json_detail::index(json_detail::join(path, "counts"), k), "shape differs from family 0");
    }
  }
  return h;
}

inline Json to_json(const BinRule& r) { return Json{{"edges", r.edges()}}; }

inline BinRule bin_rule_from_json(const Json& j, const std::string& path = "bin_rule") {
  const Json& e = json_detail::array(json_detail::require(j, "edges", path), json_detail::join(path, "edges"));
  std::vector<int> edges;
  for (std::size_t k = 0; k < e.size(); ++k) {
    edges.push_back(static_cast<int>(json_detail::integer(e[k], json_detail::index(json_detail::join(path, "edges"), k))));
  }
  try {
    return BinRule(std::move(edges));
  } catch (const InvariantError& err) {
    throw ConfigError(json_detail::join(path, "edges"), err.what());
  }
}

inline Json to_json(const Estimate& e) {
  Json states = Json::array();
  for (const auto& s : e.sigma_hats) states.push_back(to_json(s.matrix()));
  return Json{{"sigma_hats", std::move(states)},
              {"q_hat", to_json(e.q_hat.matrix())},
              {"loglike", e.loglike},
              {"s_sigma", e.s_sigma},
              {"s_q", e.s_q},
              {"iterations", e.iterations},
              {"converged", e.converged}};
}

inline Estimate estimate_from_json(const Json& j, const std::string& path = "estimate") {
  using namespace json_detail;
  Estimate e;
  const Json& states = array(require(j, "sigma_hats", path), join(path, "sigma_hats"));
  for (std::size_t k = 0; k < states.size(); ++k) {
    const auto p = index(join(path, "sigma_hats"), k);
    try {
      e.sigma_hats.emplace_back(cmatrix_from_json(states[k], p));
    } catch (const InvariantError& err) {
      throw ConfigError(p, err.what());
    }
  }
  try {
    e.q_hat = TransitionMatrix(rmatrix_from_json(require(j, "q_hat", path), join(path, "q_hat")));
  } catch (const InvariantError& err) {
    throw ConfigError(join(path, "q_hat"), err.what());
  }
  e.loglike = number(require(j, "loglike", path), join(path, "loglike"));
  e.s_sigma = number(require(j, "s_sigma", path), join(path, "s_sigma"));
  e.s_q = number(require(j, "s_q", path), join(path, "s_q"));
  e.iterations = static_cast<int>(integer(require(j, "iterations", path), join(path, "iterations")));
  e.converged = require(j, "converged", path).get<bool>();
  return e;
}

inline Json to_json(const ObservableBounds& b) {
  const auto& d = b.diagnostics;
  return Json{{"observable", b.label},
              {"lower", b.lower},
              {"upper", b.upper},
              {"identifiable", b.identifiable},
              {"valid", b.valid},
              {"diagnostics",
               {{"lower_gap", d.lower_gap},
                {"upper_gap", d.upper_gap},
                {"max_constraint_residual", d.max_constraint_residual},
                {"free_directions", d.free_directions},
                {"face_restricted", d.face_restricted},
                {"interior_margin", d.interior_margin},
                {"newton_steps", d.newton_steps}}}};
}

inline ObservableBounds bounds_from_json(const Json& j, const std::string& path) {
  using namespace json_detail;
  ObservableBounds b;
  b.label = string(require(j, "observable", path), join(path, "observable"));
  b.lower = number(require(j, "lower", path), join(path, "lower"));
  b.upper = number(require(j, "upper", path), join(path, "upper"));
  b.identifiable = require(j, "identifiable", path).get<bool>();
  b.valid = require(j, "valid", path).get<bool>();
  return b;
}

inline Json to_json(const ConfidenceInterval& ci) {
  return Json{{"method", to_string(ci.method)},
              {"level", ci.level},
              {"lower", ci.lower},
              {"upper", ci.upper},
              {"degenerate", ci.degenerate}};
}

inline Json to_json(const BootstrapRecord& r) {
  Json j{{"index", r.index}, {"ok", r.ok}};
  if (!r.ok) {
    j["failure"] = r.failure;
    return j;
  }
  j["lambda"] = r.lambda;
  j["estimate"] = to_json(r.estimate);
  Json b = Json::array();
  for (const auto& row : r.bounds) {
    Json per = Json::array();
    for (const auto& ob : row) per.push_back(to_json(ob));
    b.push_back(std::move(per));
  }
  j["bounds"] = std::move(b);
  return j;
}

inline BootstrapRecord bootstrap_record_from_json(const Json& j, const std::string& path) {
  using namespace json_detail;
  BootstrapRecord r;
  r.index = static_cast<std::size_t>(integer(require(j, "index", path), join(path, "index")));
  r.ok = require(j, "ok", path).get<bool>();
  if (!r.ok) {
    r.failure = string(require(j, "failure", path), join(path, "failure"));
    return r;
  }
  r.lambda = number(require(j, "lambda", path), join(path, "lambda"));
  r.estimate = estimate_from_json(require(j, "estimate", path), join(path, "estimate"));
  const Json& b = array(require(j, "bounds", path), join(path, "bounds"));
  for (std::size_t s = 0; s < b.size(); ++s) {
    std::vector<ObservableBounds> row;
    for (std::size_t o = 0; o < b[s].size(); ++o) {
      row.push_back(bounds_from_json(b[s][o], index(index(join(path, "bounds"), s), o)));
    }
    r.bounds.push_back(std::move(row));
  }
  return r;
}

// ---------------------------------------------------------------------------
// run configuration

struct RunConfig {
  ExperimentConfig experiment;
  FitSettings fit;
  BootstrapOptions bootstrap;
  double level = 0.95;
  std::vector<Observable> observables;
};

inline Observable builtin_observable(const std::string& name, Eigen::Index dim, const std::string& path) {
  if (name != "bell" && name != "second-ion-bright") {
    throw ConfigError(path, "unknown built-in observable '" + name + "' (known: bell, second-ion-bright)");
  }
  if (dim != 4) throw ConfigError(path, "built-in observable '" + name + "' needs dimension 4");
  return name == "bell" ? bell_observable() : second_ion_bright_observable();
}

/// {"builtin": name} or {"label": ..., "matrix": ...}.
inline Observable observable_from_json(const Json& j, Eigen::Index dim, const std::string& path) {
  using namespace json_detail;
  if (j.is_string()) return builtin_observable(j.get<std::string>(), dim, path);
  if (const Json* b = optional(j, "builtin")) return builtin_observable(string(*b, join(path, "builtin")), dim, path);
  const std::string label = string(require(j, "label", path), join(path, "label"));
  const CMatrix m = cmatrix_from_json(require(j, "matrix", path), join(path, "matrix"));
  if (m.rows() != dim || m.cols() != dim) {
    throw ConfigError(join(path, "matrix"), "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
  }
  try {
    return Observable(m, label);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(join(path, "matrix"), err.what());
  }
}

/// {"matrix": M} | {"ket": v} | {"ket": v, "weight": w} meaning
/// w |v><v| + (1 - w) 1/d. Kets are normalized.
inline DensityMatrix state_from_json(const Json& j, const std::string& path) {
  using namespace json_detail;
  try {
    if (const Json* m = optional(j, "matrix")) return DensityMatrix(cmatrix_from_json(*m, join(path, "matrix")));
    const CVector ket = cvector_from_json(require(j, "ket", path), join(path, "ket"));
    if (!(ket.norm() > 0.0)) throw ConfigError(join(path, "ket"), "zero vector");
    const CMatrix pure = ket_projector(ket / ket.norm());
    if (const Json* w = optional(j, "weight")) {
      const double weight = number(*w, join(path, "weight"));
      if (!(weight >= 0.0 && weight <= 1.0)) throw ConfigError(join(path, "weight"), "must lie in [0, 1]");
      const auto d = pure.rows();
      return DensityMatrix(weight * pure + (1.0 - weight) * CMatrix::Identity(d, d) / static_cast<double>(d));
    }
    return DensityMatrix(pure);
  } catch (const InvariantError& err) {
    throw ConfigError(path, err.what());
  }
}

/// {"matrix": U, "label": ...} | {"rotation": {"theta", "phi", "num_qubits"}, "label": ...}.
inline UnitaryOp unitary_from_json(const Json& j, const std::string& path) {
  using namespace json_detail;
  std::string label;
  if (const Json* l = optional(j, "label")) label = string(*l, join(path, "label"));
  try {
    if (const Json* m = optional(j, "matrix")) return UnitaryOp(cmatrix_from_json(*m, join(path, "matrix")), label);
    const Json& r = require(j, "rotation", path);
    const auto rp = join(path, "rotation");
    const double theta = number(require(r, "theta", rp), join(rp, "theta"));
    const double phi = number(require(r, "phi", rp), join(rp, "phi"));
    int qubits = 1;
    if (const Json* n = optional(r, "num_qubits")) qubits = static_cast<int>(integer(*n, join(rp, "num_qubits")));
    if (qubits < 1 || qubits > 6) throw ConfigError(join(rp, "num_qubits"), "must be between 1 and 6");
    return UnitaryOp(rotation_gate(theta, phi, qubits).matrix(), label);
  } catch (const InvariantError& err) {
    throw ConfigError(path, err.what());
  }
}

/// {"diagonal": [...]} | {"matrix": M}.
inline MeasurementOperator projector_from_json(const Json& j, const std::string& path) {
  using namespace json_detail;
  try {
    if (const Json* diag = optional(j, "diagonal")) {
      const auto dp = join(path, "diagonal");
      array(*diag, dp);
      CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(diag->size()), static_cast<Eigen::Index>(diag->size()));
      for (std::size_t k = 0; k < diag->size(); ++k) m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = number((*diag)[k], index(dp, k));
      return MeasurementOperator(m);
    }
    return MeasurementOperator(cmatrix_from_json(require(j, "matrix", path), join(path, "matrix")));
  } catch (const InvariantError& err) {
    throw ConfigError(path, err.what());
  }
}

inline RunConfig run_config_from_json(const Json& root) {
  using namespace json_detail;
  std::uint64_t seed = 42;
  if (const Json* s = optional(root, "seed")) {
    const auto v = integer(*s, "seed");
    if (v < 0) throw ConfigError("seed", "must be nonnegative");
    seed = static_cast<std::uint64_t>(v);
  }

  const Json& ex = require(root, "experiment", "");
  const std::string ep = "experiment";
  const DensityMatrix rho0 = state_from_json(require(ex, "rho0", ep), join(ep, "rho0"));

  std::vector<UnitaryOp> unitaries;
  const Json& us = array(require(ex, "unitaries", ep), join(ep, "unitaries"));
  for (std::size_t k = 0; k < us.size(); ++k) unitaries.push_back(unitary_from_json(us[k], index(join(ep, "unitaries"), k)));

  std::vector<MeasurementOperator> projectors;
  const Json& ps = array(require(ex, "projectors", ep), join(ep, "projectors"));
  for (std::size_t k = 0; k < ps.size(); ++k) projectors.push_back(projector_from_json(ps[k], index(join(ep, "projectors"), k)));

  std::optional<MeasurementModel> model;
  try {
    model.emplace(rho0, std::move(unitaries), Povm(std::move(projectors)));
  } catch (const std::invalid_argument& err) {
    throw ConfigError(ep, err.what());
  }
  RunConfig rc{ExperimentConfig{std::move(*model), {}, {}}, {}, {}, 0.95, {}};
  ExperimentConfig& cfg = rc.experiment;
  cfg.seed = seed;

  const Json& ts = array(require(ex, "true_states", ep), join(ep, "true_states"));
  for (std::size_t k = 0; k < ts.size(); ++k) cfg.true_states.push_back(state_from_json(ts[k], index(join(ep, "true_states"), k)));

  const Json& means = array(require(ex, "poisson_means", ep), join(ep, "poisson_means"));
  for (std::size_t k = 0; k < means.size(); ++k) cfg.poisson_means.push_back(number(means[k], index(join(ep, "poisson_means"), k)));

  if (const Json* m = optional(ex, "max_count")) cfg.max_count = static_cast<int>(integer(*m, join(ep, "max_count")));
  if (const Json* n = optional(ex, "n_trials")) cfg.n_trials = integer(*n, join(ep, "n_trials"));
  if (const Json* f = optional(ex, "reference_trial_factor")) {
    const auto fp = join(ep, "reference_trial_factor");
    cfg.reference_factor_num = integer(require(*f, "numerator", fp), join(fp, "numerator"));
    cfg.reference_factor_den = integer(require(*f, "denominator", fp), join(fp, "denominator"));
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(ep, err.what());
  }

  if (const Json* b = optional(root, "binning")) {
    if (const Json* g = optional(*b, "bins")) rc.fit.bins = static_cast<int>(integer(*g, "binning.bins"));
    if (const Json* f = optional(*b, "training_fraction")) rc.fit.training_fraction = number(*f, "binning.training_fraction");
    if (rc.fit.bins < 1) throw ConfigError("binning.bins", "must be >= 1");
    if (!(rc.fit.training_fraction > 0.0 && rc.fit.training_fraction < 1.0)) {
      throw ConfigError("binning.training_fraction", "must lie in (0, 1)");
    }
  }

  if (const Json* s = optional(root, "solver")) {
    SolverOptions& o = rc.fit.solver;
    if (const Json* v = optional(*s, "t_sigma")) o.t_sigma = number(*v, "solver.t_sigma");
    if (const Json* v = optional(*s, "t_q")) o.t_q = number(*v, "solver.t_q");
    if (const Json* v = optional(*s, "max_outer_iterations")) o.max_outer_iterations = static_cast<int>(integer(*v, "solver.max_outer_iterations"));
    if (const Json* v = optional(*s, "max_rrr_iterations")) o.max_rrr_iterations = static_cast<int>(integer(*v, "solver.max_rrr_iterations"));
    if (const Json* v = optional(*s, "max_q_iterations")) o.max_q_iterations = static_cast<int>(integer(*v, "solver.max_q_iterations"));
    if (const Json* v = optional(*s, "multi_start")) o.multi_start = static_cast<int>(integer(*v, "solver.multi_start"));
    try {
      o.validate();
    } catch (const std::invalid_argument& err) {
      throw ConfigError("solver", err.what());
    }
  }
  rc.fit.solver.multi_start_seed = cfg.seed;
  rc.bootstrap.solver = rc.fit.solver;

  if (const Json* b = optional(root, "bootstrap")) {
    if (const Json* v = optional(*b, "resamples")) {
      const auto t = integer(*v, "bootstrap.resamples");
      if (t < 2) throw ConfigError("bootstrap.resamples", "must be >= 2");
      rc.bootstrap.t = static_cast<std::size_t>(t);
    }
    if (const Json* v = optional(*b, "workers")) {
      const auto w = integer(*v, "bootstrap.workers");
      if (w < 1) throw ConfigError("bootstrap.workers", "must be >= 1");
      rc.bootstrap.workers = static_cast<unsigned>(w);
    }
    if (const Json* v = optional(*b, "level")) {
      rc.level = number(*v, "bootstrap.level");
      if (!(rc.level > 0.0 && rc.level < 1.0)) throw ConfigError("bootstrap.level", "must lie in (0, 1)");
    }
  }

  const Eigen::Index d = cfg.dim();
  if (const Json* obs = optional(root, "observables")) {
    array(*obs, "observables");
    for (std::size_t k = 0; k < obs->size(); ++k) rc.observables.push_back(observable_from_json((*obs)[k], d, index("observables", k)));
  } else if (d == 4) {
    rc.observables = {bell_observable(), second_ion_bright_observable()};
  }
  return rc;
}

}  // namespace qtomo
