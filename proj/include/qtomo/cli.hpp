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

// Command-line pipeline: simulate -> fit -> bounds -> bootstrap -> report.
//
// Every stage writes into one run directory and records the SHA-256 of each
// file it produced in manifest.json. A stage verifies the recorded hashes of
// everything upstream before reading it.
//
//   run/config.json
//   run/manifest.json
//   run/simulate/  histograms.json, histograms_state<j>.csv
//   run/fit/       fit.json, binned_histograms.json, loglike_trace.csv
//   run/bounds/    bounds.json
//   run/bootstrap/ records.jsonl, summary.json
//   run/report/    table.md, table.csv, plot_*.csv

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "qtomo/serialization.hpp"

namespace qtomo::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kPrecondition = 4 };

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// files

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256: digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(kHex[digest[k] >> 4]);
    out.push_back(kHex[digest[k] & 0xF]);
  }
  return out;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + p.string());
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& data) {
  std::error_code ec;
  fs::create_directories(p.parent_path(), ec);
  if (ec) throw IoError("cannot create " + p.parent_path().string() + ": " + ec.message());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << data;
  out.close();
  if (!out) throw IoError("error writing " + p.string());
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(what, std::string("malformed JSON: ") + e.what());
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// manifest

inline const std::vector<std::string>& stage_order() {
  static const std::vector<std::string> order{"simulate", "fit", "bounds", "bootstrap", "report"};
  return order;
}

class Manifest {
 public:
  explicit Manifest(fs::path run_dir) : dir_(std::move(run_dir)) {
    const auto p = dir_ / "manifest.json";
    if (fs::exists(p)) {
      doc_ = parse_json(read_file(p), p.string());
    } else {
      doc_ = Json{{"tool", "qtomo"}, {"version", kVersion}, {"stages", Json::object()}};
    }
  }

  const fs::path& dir() const { return dir_; }
  bool has_stage(const std::string& s) const { return doc_["stages"].contains(s); }
  const Json& stage(const std::string& s) const { return doc_["stages"].at(s); }
  Json& root() { return doc_; }

  std::uint64_t seed() const {
    if (!doc_.contains("seed")) throw PreconditionError("manifest has no seed; run simulate first");
    return doc_["seed"].get<std::uint64_t>();
  }

  /// Throws PreconditionError if the stage is missing, IoError if any of its
  /// files is missing or altered.
  void verify(const std::string& s) const {
    if (!has_stage(s)) throw PreconditionError("stage '" + s + "' has not been run in " + dir_.string());
    for (const auto& [rel, hash] : stage(s)["files"].items()) {
      const auto p = dir_ / rel;
      if (!fs::exists(p)) throw IoError("missing file recorded by stage '" + s + "': " + p.string());
      if (sha256_hex(read_file(p)) != hash.get<std::string>()) {
        throw IoError("content hash mismatch for " + p.string() + " (recorded by stage '" + s + "')");
      }
    }
  }

  void verify_config() const {
    if (!doc_.contains("config")) throw PreconditionError("manifest has no config; run simulate first");
    const auto p = dir_ / "config.json";
    if (!fs::exists(p)) throw IoError("missing " + p.string());
    if (sha256_hex(read_file(p)) != doc_["config"]["sha256"].get<std::string>()) {
      throw IoError("content hash mismatch for " + p.string());
    }
  }

  /// Records a completed stage. Downstream stages are dropped when any output
  /// file changed.
  void record(const std::string& s, const std::map<std::string, std::string>& files, Json parameters) {
    bool changed = !has_stage(s);
    Json hashes = Json::object();
    for (const auto& [rel, hash] : files) hashes[rel] = hash;
    if (!changed) changed = stage(s)["files"] != hashes;
    if (changed) {
      const auto& order = stage_order();
      const auto it = std::find(order.begin(), order.end(), s);
      for (auto d = it + 1; d != order.end(); ++d) doc_["stages"].erase(*d);
    }
    doc_["stages"][s] = Json{{"completed_at", utc_timestamp()}, {"parameters", std::move(parameters)}, {"files", hashes}};
    save();
  }

  void save() const { write_file(dir_ / "manifest.json", dump(doc_)); }

 private:
  fs::path dir_;
  Json doc_;
};

/// Collects files of one stage and their hashes.
class StageWriter {
 public:
  StageWriter(const fs::path& run_dir, std::string stage) : run_dir_(run_dir), stage_(std::move(stage)) {}

  void write(const std::string& name, const std::string& data) {
    const std::string rel = stage_ + "/" + name;
    write_file(run_dir_ / rel, data);
    files_[rel] = sha256_hex(data);
  }

  const std::map<std::string, std::string>& files() const { return files_; }

 private:
  fs::path run_dir_;
  std::string stage_;
  std::map<std::string, std::string> files_;
};

inline Json read_stage_json(const Manifest& m, const std::string& rel) {
  const auto p = m.dir() / rel;
  return parse_json(read_file(p), p.string());
}

inline RunConfig load_run_config(const Manifest& m) {
  m.verify_config();
  const auto p = m.dir() / "config.json";
  RunConfig rc = run_config_from_json(parse_json(read_file(p), p.string()));
  rc.experiment.seed = m.seed();
  rc.fit.solver.multi_start_seed = m.seed();
  rc.bootstrap.solver.multi_start_seed = m.seed();
  return rc;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string counts_csv(const CountMatrix& c) {
  std::string out = "unitary";
  for (Eigen::Index b = 0; b < c.cols(); ++b) out += ",c" + std::to_string(b);
  out += "\n";
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    out += std::to_string(i);
    for (Eigen::Index b = 0; b < c.cols(); ++b) out += "," + std::to_string(c(i, b));
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// stages

struct Options {
  fs::path out;
  std::optional<std::uint64_t> seed;
  fs::path config;
  std::optional<int> bins;
  std::optional<double> t_sigma;
  std::optional<double> t_q;
  std::vector<std::string> observables;
  std::optional<std::size_t> resamples;
  std::optional<unsigned> workers;
};

inline void cmd_simulate(const Options& o) {
  const std::string text = read_file(o.config);
  RunConfig rc = run_config_from_json(parse_json(text, o.config.string()));
  if (o.seed) rc.experiment.seed = *o.seed;
  const auto raw = sample_experiments(rc.experiment);

  Manifest m(o.out);
  write_file(o.out / "config.json", text);
  const std::string config_hash = sha256_hex(text);
  if (m.root().contains("config") && m.root()["config"]["sha256"] != config_hash) m.root()["stages"] = Json::object();
  if (m.root().contains("seed") && m.root()["seed"] != rc.experiment.seed) m.root()["stages"] = Json::object();
  m.root()["config"] = Json{{"path", o.config.string()}, {"sha256", config_hash}};
  m.root()["seed"] = rc.experiment.seed;

  StageWriter w(o.out, "simulate");
  Json doc = to_json(raw);
  Json trials = Json::array();
  for (std::size_t j = 0; j < raw.states(); ++j) trials.push_back(rc.experiment.trials_for_state(j));
  doc["trials"] = std::move(trials);
  w.write("histograms.json", dump(doc));
  for (std::size_t j = 0; j < raw.states(); ++j) w.write("histograms_state" + std::to_string(j) + ".csv", counts_csv(raw.counts[j]));
  m.record("simulate", w.files(), Json{{"seed", rc.experiment.seed}});
  std::cerr << "simulate: " << raw.states() << " state families x " << raw.unitaries() << " unitaries x "
            << raw.outcomes() << " outcomes -> " << (o.out / "simulate").string() << "\n";
}

inline void cmd_fit(const Options& o) {
  Manifest m(o.out);
  m.verify("simulate");
  RunConfig rc = load_run_config(m);
  if (o.bins) rc.fit.bins = *o.bins;
  if (o.t_sigma) rc.fit.solver.t_sigma = *o.t_sigma;
  if (o.t_q) rc.fit.solver.t_q = *o.t_q;
  if (rc.fit.bins < 1) throw ConfigError("--bins", "must be >= 1");
  try {
    rc.fit.solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("--t-sigma/--t-q", e.what());
  }
  const auto raw = histograms_from_json(read_stage_json(m, "simulate/histograms.json"));
  if (raw.states() != rc.experiment.num_state_families() ||
      raw.unitaries() != static_cast<Eigen::Index>(rc.experiment.model.num_unitaries())) {
    throw IoError("simulate/histograms.json does not match the configured experiment");
  }

  FitResult fit;
  try {
    fit = fit_histograms(raw, rc.experiment.model, rc.fit, m.seed());
  } catch (const RankDeficientError& e) {
    throw PreconditionError(e.what());
  }

  StageWriter w(o.out, "fit");
  Json settings{{"bins", fit.rule.bins()},
                {"training_fraction", rc.fit.training_fraction},
                {"t_sigma", rc.fit.solver.t_sigma},
                {"t_q", rc.fit.solver.t_q},
                {"max_outer_iterations", rc.fit.solver.max_outer_iterations},
                {"multi_start", rc.fit.solver.multi_start}};
  Json doc{{"settings", settings},
           {"bin_rule", to_json(fit.rule)},
           {"mutual_information_trace", fit.mi_trace},
           {"q_init", to_json(fit.q_init.matrix())},
           {"estimate", to_json(fit.estimate)},
           {"likelihood_frequency", likelihood_frequency(fit.binned.as_weights())}};
  w.write("fit.json", dump(doc));
  w.write("binned_histograms.json", dump(to_json(fit.binned)));
  std::string trace = "step,loglike\n";
  for (std::size_t k = 0; k < fit.estimate.trace.size(); ++k) {
    trace += std::to_string(k) + "," + format_double(fit.estimate.trace[k]) + "\n";
  }
  w.write("loglike_trace.csv", trace);
  m.record("fit", w.files(), settings);
  std::cerr << "fit: " << fit.rule.bins() << " bins, " << fit.estimate.iterations << " outer iterations, "
            << (fit.estimate.converged ? "converged" : "NOT converged") << ", loglike "
            << format_double(fit.estimate.loglike) << "\n";
  if (!fit.estimate.converged) std::cerr << "fit: warning: stopping thresholds not reached\n";
}

struct FitArtifacts {
  RunConfig rc;
  Estimate estimate;
  HistogramSet binned;
  Json fit_doc;
};

inline FitArtifacts load_fit(const Manifest& m) {
  m.verify("simulate");
  m.verify("fit");
  FitArtifacts fa{load_run_config(m), {}, {}, read_stage_json(m, "fit/fit.json")};
  fa.estimate = estimate_from_json(fa.fit_doc.at("estimate"));
  fa.binned = histograms_from_json(read_stage_json(m, "fit/binned_histograms.json"));
  return fa;
}

inline std::vector<Observable> resolve_observables(const Options& o, const RunConfig& rc) {
  if (o.observables.empty()) {
    if (rc.observables.empty()) throw ConfigError("observables", "none configured and no --observable given");
    return rc.observables;
  }
  std::vector<Observable> out;
  const Eigen::Index d = rc.experiment.dim();
  for (const auto& spec : o.observables) {
    if (spec == "bell" || spec == "second-ion-bright") {
      out.push_back(builtin_observable(spec, d, "--observable"));
      continue;
    }
    const fs::path p(spec);
    if (!fs::exists(p)) throw ConfigError("--observable", "'" + spec + "' is neither a built-in name nor a file");
    out.push_back(observable_from_json(parse_json(read_file(p), p.string()), d, p.string()));
  }
  return out;
}

inline void cmd_bounds(const Options& o) {
  Manifest m(o.out);
  const auto fa = load_fit(m);
  const auto observables = resolve_observables(o, fa.rc);
  const auto basis = build_constraint_basis(fa.estimate.q_hat, fa.rc.experiment.model);

  Json obs = Json::array();
  for (const auto& ob : observables) obs.push_back(Json{{"label", ob.label()}, {"matrix", to_json(ob.matrix())}});
  Json states = Json::array();
  for (std::size_t j = 0; j < fa.estimate.sigma_hats.size(); ++j) {
    Json per = Json::array();
    for (const auto& ob : observables) {
      const auto b = solve_bounds(ob, fa.estimate.sigma_hats[j], basis);
      Json e = to_json(b);
      e["ml_value"] = trace_product(ob.matrix(), fa.estimate.sigma_hats[j].matrix());
      e["true_value"] = trace_product(ob.matrix(), fa.rc.experiment.true_states.at(j).matrix());
      per.push_back(std::move(e));
      std::cerr << "bounds: state " << j + 1 << " " << ob.label() << " [" << format_double(b.lower) << ", "
                << format_double(b.upper) << "]" << (b.identifiable ? " identifiable" : "")
                << (b.valid ? "" : " INVALID") << "\n";
    }
    states.push_back(std::move(per));
  }
  Json doc{{"constraint_basis",
            {{"retained_count", basis.retained_count()},
             {"projector_rank", basis.projector_rank},
             {"rank_tolerance", basis.rank_tolerance},
             {"measurement_singular_values", std::vector<double>(basis.measurement_singular_values.data(),
                                                                 basis.measurement_singular_values.data() +
                                                                     basis.measurement_singular_values.size())}}},
           {"observables", std::move(obs)},
           {"states", std::move(states)}};
  StageWriter w(o.out, "bounds");
  w.write("bounds.json", dump(doc));
  m.record("bounds", w.files(), Json{{"observables", observables.size()}});
}

inline std::vector<Observable> observables_from_bounds(const Json& doc, Eigen::Index d) {
  std::vector<Observable> out;
  const Json& list = doc.at("observables");
  for (std::size_t k = 0; k < list.size(); ++k) out.push_back(observable_from_json(list[k], d, "bounds.observables"));
  return out;
}

/// Two-sided interval for an identifiable value, one-sided combination otherwise.
inline ConfidenceInterval observable_interval(CiMethod method, const Json& bounds_entry,
                                              const std::vector<double>& ml_samples,
                                              const std::vector<double>& lower_samples,
                                              const std::vector<double>& upper_samples, double level) {
  if (bounds_entry.at("identifiable").get<bool>()) {
    return confidence_interval(method, bounds_entry.at("ml_value").get<double>(), ml_samples, level);
  }
  return combine_one_sided(lower_samples, upper_samples, bounds_entry.at("lower").get<double>(),
                           bounds_entry.at("upper").get<double>(), method, level);
}

inline Json bootstrap_summary(const FitArtifacts& fa, const Json& bounds_doc, const std::vector<Observable>& observables,
                              const BootstrapRun& run, double level) {
  const auto lr = lr_test(fa.estimate, fa.binned.as_weights(), run);
  Json states = Json::array();
  for (std::size_t j = 0; j < fa.estimate.sigma_hats.size(); ++j) {
    Json per = Json::array();
    for (std::size_t k = 0; k < observables.size(); ++k) {
      const Json& be = bounds_doc.at("states").at(j).at(k);
      std::vector<double> ml;
      for (const auto& r : run.records)
        if (r.ok) ml.push_back(trace_product(observables[k].matrix(), r.estimate.sigma_hats[j].matrix()));
      const auto lo = run.bound_samples(j, k, false);
      const auto hi = run.bound_samples(j, k, true);
      Json e{{"observable", observables[k].label()},
             {"ml_value", be.at("ml_value")},
             {"sdp_lower", be.at("lower")},
             {"sdp_upper", be.at("upper")},
             {"identifiable", be.at("identifiable")}};
      for (auto method : {CiMethod::kBasic, CiMethod::kBiasCorrected}) {
        // too few successful resamples for an interval
        e[to_string(method)] = ml.size() < kMinCiSamples ? Json(nullptr)
                                                          : to_json(observable_interval(method, be, ml, lo, hi, level));
      }
      per.push_back(std::move(e));
    }
    states.push_back(Json{{"state", j + 1}, {"observables", std::move(per)}});
  }
  return Json{{"resamples", run.t},
              {"master_seed", run.master_seed},
              {"level", level},
              {"quantile_rule", "linear interpolation at position p(t-1)+1"},
              {"successful", run.t - run.failures()},
              {"failures", run.failures()},
              {"unreliable", run.unreliable()},
              {"likelihood_ratio",
               {{"lambda0", lr.lambda0}, {"p_value", lr.p_value}, {"tie_rule", "fraction of samples <= lambda0"}}},
              {"states", std::move(states)}};
}

inline void cmd_bootstrap(const Options& o) {
  Manifest m(o.out);
  const auto fa = load_fit(m);
  m.verify("bounds");
  const Json bounds_doc = read_stage_json(m, "bounds/bounds.json");
  const auto observables = observables_from_bounds(bounds_doc, fa.rc.experiment.dim());

  BootstrapOptions bo = fa.rc.bootstrap;
  if (o.resamples) bo.t = *o.resamples;
  if (o.workers) bo.workers = *o.workers;
  if (bo.t < 2) throw ConfigError("--t", "must be >= 2");
  if (bo.workers < 1) throw ConfigError("--workers", "must be >= 1");
  bo.master_seed = o.seed ? *o.seed : m.seed();
  const auto& fs_doc = fa.fit_doc.at("settings");
  bo.solver.t_sigma = fs_doc.at("t_sigma").get<double>();
  bo.solver.t_q = fs_doc.at("t_q").get<double>();

  const auto run = bootstrap_run(fa.estimate, fa.rc.experiment.model, fa.binned, observables, bo);
  std::string lines;
  for (const auto& r : run.records) lines += to_json(r).dump() + "\n";
  const auto summary = bootstrap_summary(fa, bounds_doc, observables, run, fa.rc.level);

  StageWriter w(o.out, "bootstrap");
  w.write("records.jsonl", lines);
  w.write("summary.json", dump(summary));
  m.record("bootstrap", w.files(), Json{{"resamples", bo.t}, {"master_seed", bo.master_seed}, {"workers", bo.workers}});
  std::cerr << "bootstrap: " << run.t - run.failures() << "/" << run.t << " resamples succeeded"
            << (run.unreliable() ? " (UNRELIABLE: more than 5% failed)" : "") << ", p-value "
            << format_double(summary["likelihood_ratio"]["p_value"].get<double>()) << "\n";
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string pair_text(double a, double b) { return "(" + fmt(a) + ", " + fmt(b) + ")"; }

}  // namespace detail

inline void cmd_report(const Options& o) {
  Manifest m(o.out);
  const auto fa = load_fit(m);
  m.verify("bounds");
  m.verify("bootstrap");
  const Json bounds_doc = read_stage_json(m, "bounds/bounds.json");
  const Json summary = read_stage_json(m, "bootstrap/summary.json");

  std::string md = "# qtomo report\n\n";
  std::string csv = "state,observable,row,lower,upper\n";
  auto csv_row = [&](std::size_t j, const std::string& label, const std::string& row, double lo, double hi) {
    csv += std::to_string(j) + "," + label + "," + row + "," + format_double(lo) + "," + format_double(hi) + "\n";
  };
  for (const auto& st : summary.at("states")) {
    const auto j = st.at("state").get<std::size_t>();
    const auto& per = st.at("observables");
    md += "## State " + std::to_string(j) + "\n\n|  |";
    std::string sep = "|---|";
    for (const auto& e : per) {
      md += " " + e.at("observable").get<std::string>() + " |";
      sep += "---|";
    }
    md += "\n" + sep + "\n";
    auto row = [&](const std::string& name, auto cell) {
      md += "| " + name + " |";
      for (std::size_t k = 0; k < per.size(); ++k) md += " " + cell(k) + " |";
      md += "\n";
    };
    const Json& be = bounds_doc.at("states").at(j - 1);
    row("True", [&](std::size_t k) {
      const double v = be.at(k).at("true_value").get<double>();
      csv_row(j, per[k].at("observable").get<std::string>(), "true", v, v);
      return detail::fmt(v);
    });
    row("M.L.", [&](std::size_t k) {
      const double v = per[k].at("ml_value").get<double>();
      csv_row(j, per[k].at("observable").get<std::string>(), "ml", v, v);
      return detail::fmt(v);
    });
    row("SDPs", [&](std::size_t k) {
      const double lo = per[k].at("sdp_lower").get<double>(), hi = per[k].at("sdp_upper").get<double>();
      csv_row(j, per[k].at("observable").get<std::string>(), "sdp", lo, hi);
      return detail::pair_text(lo, hi);
    });
    for (const auto& [key, name] : {std::pair{"basic", "Basic C.I."}, std::pair{"bias_corrected", "Bias corrected C.I."}}) {
      row(name, [&, key = key](std::size_t k) {
        const auto& ci = per[k].at(key);
        if (ci.is_null()) return std::string("n/a");
        const double lo = ci.at("lower").get<double>(), hi = ci.at("upper").get<double>();
        csv_row(j, per[k].at("observable").get<std::string>(), key, lo, hi);
        return detail::pair_text(lo, hi) + (ci.at("degenerate").get<bool>() ? " *" : "");
      });
    }
    md += "\n";
  }
  const auto& lr = summary.at("likelihood_ratio");
  md += "Likelihood ratio statistic: " + format_double(lr.at("lambda0").get<double>()) +
        "  \nEmpirical p-value: " + format_double(lr.at("p_value").get<double>()) + " (" +
        lr.at("tie_rule").get<std::string>() + ")  \nResamples: " + std::to_string(summary.at("successful").get<std::size_t>()) +
        " of " + std::to_string(summary.at("resamples").get<std::size_t>()) + " succeeded" +
        (summary.at("unreliable").get<bool>() ? " (unreliable)" : "") + "\n\n" +
        "Basic and bias-corrected intervals are separate methods and are not merged. "
        "A * marks a bias-corrected interval that fell back to the sample range.\n";

  // plot data
  const auto probs = fitted_probabilities(fa.estimate, fa.rc.experiment.model);
  std::string overlay = "state,unitary,bin,observed,expected\n";
  for (std::size_t j = 0; j < probs.size(); ++j) {
    for (Eigen::Index i = 0; i < probs[j].rows(); ++i) {
      const double n = static_cast<double>(fa.binned.trials(j, i));
      for (Eigen::Index c = 0; c < probs[j].cols(); ++c) {
        overlay += std::to_string(j) + "," + std::to_string(i) + "," + std::to_string(c) + "," +
                   std::to_string(fa.binned.counts[j](i, c)) + "," + format_double(n * probs[j](i, c)) + "\n";
      }
    }
  }
  const std::string trace = read_file(m.dir() / "fit/loglike_trace.csv");
  std::string dist = "resample,state,observable,ml_value,lower,upper,lambda\n";
  {
    std::istringstream in(read_file(m.dir() / "bootstrap/records.jsonl"));
    const auto observables = observables_from_bounds(bounds_doc, fa.rc.experiment.dim());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      const auto r = bootstrap_record_from_json(parse_json(line, "bootstrap/records.jsonl"), "records[" + std::to_string(n++) + "]");
      if (!r.ok) continue;
      for (std::size_t j = 0; j < r.bounds.size(); ++j) {
        for (std::size_t k = 0; k < r.bounds[j].size(); ++k) {
          dist += std::to_string(r.index) + "," + std::to_string(j + 1) + "," + observables[k].label() + "," +
                  format_double(trace_product(observables[k].matrix(), r.estimate.sigma_hats[j].matrix())) + "," +
                  format_double(r.bounds[j][k].lower) + "," + format_double(r.bounds[j][k].upper) + "," +
                  format_double(r.lambda) + "\n";
        }
      }
    }
  }

  StageWriter w(o.out, "report");
  w.write("table.md", md);
  w.write("table.csv", csv);
  w.write("plot_histograms.csv", overlay);
  w.write("plot_loglike.csv", trace);
  w.write("plot_bootstrap.csv", dist);
  m.record("report", w.files(), Json::object());
  std::cout << md;
}

// ---------------------------------------------------------------------------
// entry point

/// Parses argv and runs one command; returns the process exit code.
inline int run(int argc, const char* const* argv) {
  CLI::App app{"qtomo: maximum-likelihood tomography with an unknown readout process"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "master seed (overrides the config / manifest seed)");
  std::string out_dir;
  app.add_option("--out", out_dir, "run directory")->required();

  auto* sim = app.add_subcommand("simulate", "simulate reference and probing histograms");
  std::string config_path;
  sim->add_option("--config", config_path, "configuration JSON")->required();

  auto* fit = app.add_subcommand("fit", "training split, binning and alternating maximum-likelihood fit");
  int bins = 0;
  double t_sigma = 0.0, t_q = 0.0;
  auto* bins_opt = fit->add_option("--bins", bins, "number of bins G");
  auto* ts_opt = fit->add_option("--t-sigma", t_sigma, "state stopping threshold");
  auto* tq_opt = fit->add_option("--t-q", t_q, "transition-matrix stopping threshold");

  auto* bnd = app.add_subcommand("bounds", "expectation-value bounds over the maximum-likelihood set");
  bnd->add_option("--observable", o.observables, "built-in name (bell, second-ion-bright) or observable JSON file");

  auto* boot = app.add_subcommand("bootstrap", "parametric bootstrap and likelihood-ratio test");
  std::size_t resamples = 0;
  unsigned workers = 0;
  auto* t_opt = boot->add_option("--t", resamples, "number of resamples");
  auto* w_opt = boot->add_option("--workers", workers, "worker threads");

  app.add_subcommand("report", "Table-style summary and plot data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  o.out = out_dir;
  if (*seed_opt) o.seed = seed_value;
  o.config = config_path;
  if (*bins_opt) o.bins = bins;
  if (*ts_opt) o.t_sigma = t_sigma;
  if (*tq_opt) o.t_q = t_q;
  if (*t_opt) o.resamples = resamples;
  if (*w_opt) o.workers = workers;

  try {
    if (*sim) cmd_simulate(o);
    else if (*fit) cmd_fit(o);
    else if (*bnd) cmd_bounds(o);
    else if (*boot) cmd_bootstrap(o);
    else cmd_report(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return kPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}

}  // namespace qtomo::cli
