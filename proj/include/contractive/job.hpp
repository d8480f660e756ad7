#pragma once

// One CLI job: load inputs, run a solver, build the JSON report and CSV traces.
// Exit codes: 0 success, 2 solver error, 3 invalid input (parse errors, bad options).

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "contractive/builtins.hpp"
#include "contractive/combinatorial.hpp"
#include "contractive/errors.hpp"
#include "contractive/inner.hpp"
#include "contractive/io.hpp"
#include "contractive/multilayer.hpp"
#include "contractive/outer.hpp"
#include "contractive/stabilize.hpp"
#include "contractive/timevary.hpp"

namespace contractive {

inline constexpr const char* kReportSchema = "1";

inline const std::vector<std::string>& job_commands() {
  static const std::vector<std::string> c{"mu2",      "mstar",    "extremizer",    "multilayer",
                                          "timevary", "bound",    "combinatorial", "shift"};
  return c;
}

struct JobSpec {
  std::string command;
  /// Matrix files (one per layer for multilayer) or a single path file.
  std::vector<std::string> inputs;
  std::optional<std::string> builtin;
  std::optional<double> m;
  std::optional<double> target;
  std::optional<double> alpha;
  std::optional<double> delta;
  std::optional<double> dt;
  std::optional<double> T;
  std::optional<double> m0;
  std::optional<int> restarts;
  std::optional<double> tol_m;
  std::optional<double> tol_phi;
  std::optional<std::string> out_json;
  /// Prefix for CSV files: <prefix>_outer.csv, _flow.csv, _path.csv, _quadrature.csv.
  std::optional<std::string> out_csv;
  bool timestamp = true;
};

struct JobResult {
  int exit_code = 0;
  nlohmann::ordered_json report;
  /// CSV suffix ("outer", "flow", "path", "quadrature") → contents.
  std::map<std::string, std::string> csv;
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cli-io/run_job: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline ojson vector_json(const Vector& v) {
  ojson out = ojson::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

/// 1-based indices, matching how partitions are usually written.
inline ojson index_json(const std::vector<Index>& idx) {
  ojson out = ojson::array();
  for (Index i : idx) out.push_back(i + 1);
  return out;
}

inline ojson partition_json(const Partition& p) {
  return ojson{{"I1", index_json(p.at_one)}, {"I2", index_json(p.at_floor)}, {"I3", index_json(p.interior)}};
}

inline std::string index_list(const std::vector<Index>& idx) {
  std::string s;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k > 0) s += ';';
    s += std::to_string(idx[k] + 1);
  }
  return s;
}

inline ojson extremizer_json(const Extremizer& e) {
  ojson out;
  out["m"] = e.iterate.floor;
  out["lambda"] = e.lambda;
  out["F"] = e.F();
  out["d"] = vector_json(e.iterate.d);
  out["partition"] = partition_json(e.partition);
  out["x"] = vector_json(e.x);
  out["z"] = vector_json(e.z);
  out["xz"] = vector_json(e.stationarity);
  out["converged"] = e.converged;
  out["near_multiple"] = e.near_multiple;
  out["flow_steps"] = e.steps;
  return out;
}

inline void extremizer_warnings(const Extremizer& e, const std::string& where, ojson& warnings) {
  if (!e.converged) warnings.push_back(where + ": inner flow did not converge");
  if (e.near_multiple) warnings.push_back(where + ": rightmost eigenvalue is near-multiple");
  if (!e.partition.interior.empty()) warnings.push_back(where + ": extremizer has interior entries");
}

inline ojson trace_json(const SolveTrace& t) {
  ojson rows = ojson::array();
  for (const TraceRow& r : t.rows) {
    ojson row;
    row["k"] = r.k;
    row["m"] = r.m;
    row["phi"] = r.phi;
    row["dphi"] = r.dphi ? ojson(*r.dphi) : ojson(nullptr);
    row["step_kind"] = to_string(r.kind);
    row["bracket"] = ojson::array({r.bracket_lo, r.bracket_hi});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string outer_csv(const SolveTrace& t) {
  std::string s = "k,m,phi,dphi,step_kind\n";
  for (const TraceRow& r : t.rows) {
    s += std::to_string(r.k) + ',' + format_double(r.m) + ',' + format_double(r.phi) + ',' +
         (r.dphi ? format_double(*r.dphi) : std::string()) + ',' + to_string(r.kind) + '\n';
  }
  return s;
}

inline std::string flow_csv(const std::vector<FlowTraceRow>& rows) {
  std::string s = "step,F,h,active_floor,active_one\n";
  for (const FlowTraceRow& r : rows) {
    s += std::to_string(r.step) + ',' + format_double(r.F) + ',' + format_double(r.h) + ',' +
         index_list(r.active_low) + ',' + index_list(r.active_high) + '\n';
  }
  return s;
}

struct Inputs {
  ojson echo;
  std::vector<Matrix> matrices;
  std::optional<MatrixPath> path;
};

inline Inputs load_matrices(const JobSpec& spec, bool allow_many) {
  Inputs in;
  if (spec.builtin) {
    if (!spec.inputs.empty()) throw std::invalid_argument("cli-io/run_job: give --builtin or --input, not both");
    std::optional<Matrix> a = builtins::matrix(*spec.builtin);
    if (!a) throw std::invalid_argument("cli-io/run_job: unknown matrix builtin '" + *spec.builtin + "'");
    in.echo["source"] = "builtin:" + *spec.builtin;
    in.matrices.push_back(std::move(*a));
  } else {
    if (spec.inputs.empty()) throw std::invalid_argument("cli-io/run_job: no input matrix (use --input or --builtin)");
    if (!allow_many && spec.inputs.size() > 1)
      throw std::invalid_argument("cli-io/run_job: '" + spec.command + "' takes one input matrix");
    ojson files = ojson::array();
    for (const std::string& f : spec.inputs) {
      files.push_back(f);
      try {
        in.matrices.push_back(parse_matrix(read_file(f)));
      } catch (const ParseError& e) {
        throw e.in(f);
      }
    }
    in.echo["source"] = files;
  }
  ojson mats = ojson::array();
  for (const Matrix& a : in.matrices) mats.push_back(matrix_to_json(a));
  if (allow_many) {
    in.echo["layers"] = mats;
  } else {
    in.echo["matrix"] = mats.front();
  }
  return in;
}

inline Inputs load_path(const JobSpec& spec, double default_steps) {
  Inputs in;
  if (spec.builtin) {
    if (!spec.inputs.empty()) throw std::invalid_argument("cli-io/run_job: give --builtin or --input, not both");
    const double T = spec.T.value_or(*spec.builtin == "ex3" ? builtins::ex3_T : builtins::ex4_T);
    if (!(T > 0.0)) throw std::invalid_argument("cli-io/run_job: --T must be > 0");
    int steps = static_cast<int>(default_steps);
    if (spec.dt) {
      if (!(*spec.dt > 0.0)) throw std::invalid_argument("cli-io/run_job: --dt must be > 0");
      steps = std::max(1, static_cast<int>(std::lround(T / *spec.dt)));
    }
    std::optional<MatrixPath> p = builtins::path(*spec.builtin, steps, T);
    if (!p) throw std::invalid_argument("cli-io/run_job: unknown path builtin '" + *spec.builtin + "'");
    in.echo["source"] = "builtin:" + *spec.builtin;
    in.path = std::move(*p);
  } else {
    if (spec.inputs.size() != 1) throw std::invalid_argument("cli-io/run_job: '" + spec.command + "' takes one path file");
    if (spec.dt || spec.T) throw std::invalid_argument("cli-io/run_job: --dt and --T apply to builtin paths only");
    try {
      in.path = parse_matrix_path(read_file(spec.inputs.front()));
    } catch (const ParseError& e) {
      throw e.in(spec.inputs.front());
    }
    in.echo["source"] = spec.inputs.front();
  }
  in.echo["samples"] = in.path->size();
  in.echo["t0"] = in.path->times.front();
  in.echo["t1"] = in.path->times.back();
  in.echo["derivatives"] = in.path->mode() == DerivativeMode::kProvided ? "provided" : "finite-difference";
  return in;
}

inline OuterConfig outer_config(const JobSpec& spec) {
  OuterConfig cfg;
  if (spec.target) cfg.target = *spec.target;
  if (spec.tol_m) cfg.m_tol = *spec.tol_m;
  if (spec.tol_phi) cfg.phi_tol = *spec.tol_phi;
  if (spec.m0) cfg.m0 = *spec.m0;
  if (spec.restarts) cfg.flow.restarts = *spec.restarts;
  cfg.validate();
  return cfg;
}

inline ojson config_json(const JobSpec& spec, const OuterConfig& cfg) {
  ojson c;
  c["target"] = cfg.target;
  c["tol_m"] = cfg.m_tol;
  c["tol_phi"] = cfg.phi_tol;
  c["max_outer"] = cfg.max_outer;
  c["m0"] = cfg.m0 ? ojson(*cfg.m0) : ojson(nullptr);
  c["restarts"] = cfg.flow.restarts ? ojson(*cfg.flow.restarts) : ojson("default");
  c["h0"] = cfg.flow.h0;
  c["theta"] = cfg.flow.theta;
  c["eps_active"] = cfg.flow.eps_active;
  if (spec.m) c["m"] = *spec.m;
  if (spec.alpha) c["alpha"] = *spec.alpha;
  if (spec.delta) c["delta"] = *spec.delta;
  if (spec.dt) c["dt"] = *spec.dt;
  if (spec.T) c["T"] = *spec.T;
  return c;
}

inline double require_m(const JobSpec& spec) {
  if (!spec.m) throw std::invalid_argument("cli-io/run_job: '" + spec.command + "' needs --m");
  if (!(*spec.m >= 0.0 && *spec.m <= 1.0)) throw std::invalid_argument("cli-io/run_job: --m must lie in [0, 1]");
  return *spec.m;
}

inline ojson mstar_json(const MStarSolve& s) {
  ojson r;
  r["m_star"] = s.m_star;
  r["converged"] = s.converged;
  r["extremizer"] = extremizer_json(s.extremizer);
  r["trace"] = trace_json(s.trace);
  return r;
}

inline void run_command(const JobSpec& spec, JobResult& out) {
  ojson& report = out.report;
  ojson warnings = ojson::array();
  OuterConfig cfg = outer_config(spec);
  const std::string& cmd = spec.command;
  ojson result;

  if (cmd == "mu2") {
    Inputs in = load_matrices(spec, false);
    report["input"] = in.echo;
    report["config"] = config_json(spec, cfg);
    const Matrix& a = in.matrices.front();
    result["mu2"] = mu2(a);
    result["spectral_norm"] = spectral_norm(a);
  } else if (cmd == "mstar") {
    Inputs in = load_matrices(spec, false);
    report["input"] = in.echo;
    report["config"] = config_json(spec, cfg);
    const Matrix& a = in.matrices.front();
    result["mu2"] = mu2(a);
    result["m_upper_bound"] = upper_bound_mstar(a, cfg.target);
    const MStarSolve s = solve_mstar(a, cfg);
    const ojson solved = mstar_json(s);
    for (const auto& [k, v] : solved.items()) result[k] = v;
    if (!s.converged) warnings.push_back("outer-solve: Newton/bisection did not converge");
    extremizer_warnings(s.extremizer, "outer-solve", warnings);
    out.csv["outer"] = outer_csv(s.trace);
  } else if (cmd == "extremizer") {
    Inputs in = load_matrices(spec, false);
    report["input"] = in.echo;
    report["config"] = config_json(spec, cfg);
    FlowConfig flow = cfg.flow;
    flow.record_trace = true;
    const Extremizer e = minimize_F(in.matrices.front(), require_m(spec), std::nullopt, flow);
    result = extremizer_json(e);
    ojson located = ojson::array();
    for (const auto& [d, F] : e.located) located.push_back(ojson{{"d", vector_json(d)}, {"F", F}});
    result["located"] = located;
    result["first_order_ok"] = check_first_order(e).ok();
    extremizer_warnings(e, "inner-flow", warnings);
    out.csv["flow"] = flow_csv(e.trace);
  } else if (cmd == "multilayer") {
    Inputs in = load_matrices(spec, true);
    report["input"] = in.echo;
    report["config"] = config_json(spec, cfg);
    const LayerStack stack{in.matrices};
    ojson layers = ojson::array();
    auto layers_json = [&](const MultiExtremizer& e) {
      ojson ls = ojson::array();
      const std::vector<Vector> grads = multilayer_gradients(e);
      for (std::size_t i = 0; i < e.iterates.size(); ++i) {
        ls.push_back(ojson{{"d", vector_json(e.iterates[i].d)},
                           {"partition", partition_json(e.partitions[i])},
                           {"zw", vector_json(grads[i])}});
      }
      return ls;
    };
    if (spec.m) {
      const MultiExtremizer e = minimize_F_multilayer(stack, require_m(spec), std::nullopt, cfg.flow);
      result["m"] = *spec.m;
      result["lambda"] = e.lambda;
      result["F"] = e.F();
      result["layers"] = layers_json(e);
      result["converged"] = e.converged;
      if (!e.converged) warnings.push_back("multilayer: inner flow did not converge");
      if (e.near_multiple) warnings.push_back("multilayer: rightmost eigenvalue is near-multiple");
    } else {
      const MultiMStarSolve s = solve_mstar_multilayer(stack, cfg);
      result["m_star"] = s.m_star;
      result["converged"] = s.converged;
      result["lambda"] = s.extremizer.lambda;
      result["layers"] = layers_json(s.extremizer);
      result["trace"] = trace_json(s.trace);
      if (!s.converged) warnings.push_back("multilayer: Newton/bisection did not converge");
      if (s.extremizer.near_multiple) warnings.push_back("multilayer: rightmost eigenvalue is near-multiple");
      out.csv["outer"] = outer_csv(s.trace);
    }
  } else if (cmd == "timevary") {
    Inputs in = load_path(spec, 200);
    report["input"] = in.echo;
    report["config"] = config_json(spec, cfg);
    const MStarPath p = mstar_path(*in.path, cfg);
    ojson pts = ojson::array();
    std::string csv = "t,m_star,restarted\n";
    for (const PathPoint& pt : p.points) {
      pts.push_back(ojson{{"t", pt.t},
                          {"m_star", pt.m_star},
                          {"restarted", pt.restarted},
                          {"partition", partition_json(pt.extremizer.partition)}});
      csv += format_double(pt.t) + ',' + format_double(pt.m_star) + ',' + (pt.restarted ? "1" : "0") + '\n';
      if (pt.restarted && pt.t != p.points.front().t)
        warnings.push_back("timevary: full restart at t = " + format_double(pt.t));
      extremizer_warnings(pt.extremizer, "timevary at t = " + format_double(pt.t), warnings);
    }
    ojson sw = ojson::array();
    for (const StructureSwitch& s : p.switches) {
      sw.push_back(ojson{{"t_before", s.t_before},
                         {"t_after", s.t_after},
                         {"t_estimate", s.t_estimate},
                         {"from", partition_json(s.from)},
                         {"to", partition_json(s.to)}});
    }
    result["uniform_m_star"] = p.uniform_m_star;
    result["switches"] = sw;
    result["points"] = pts;
    out.csv["path"] = csv;
  } else if (cmd == "bound") {
    Inputs in = load_path(spec, 400);
    report["input"] = in.echo;
    report["config"] = config_json(spec, cfg);
    const Mu2Path mp = worst_mu2_path(*in.path, require_m(spec), cfg.flow);
    const AmplificationBound b = amplification_bound(mp);
    ojson pts = ojson::array();
    std::string csv = "t,mu2\n";
    for (const Mu2Point& pt : mp.points) {
      pts.push_back(ojson{{"t", pt.t}, {"mu2", pt.mu2}});
      csv += format_double(pt.t) + ',' + format_double(pt.mu2) + '\n';
      extremizer_warnings(pt.extremizer, "bound at t = " + format_double(pt.t), warnings);
    }
    result["quadrature"] = b.quadrature;
    result["C"] = b.C;
    result["min_mu2"] = b.min_mu2;
    result["max_mu2"] = b.max_mu2;
    result["points"] = pts;
    out.csv["path"] = csv;
    out.csv["quadrature"] = "m,Q,C,min_mu2,max_mu2\n" + format_double(mp.m) + ',' + format_double(b.quadrature) + ',' +
                            format_double(b.C) + ',' + format_double(b.min_mu2) + ',' + format_double(b.max_mu2) + '\n';
  } else if (cmd == "combinatorial") {
    Inputs in = load_matrices(spec, false);
    report["input"] = in.echo;
    report["config"] = config_json(spec, cfg);
    const Matrix& a = in.matrices.front();
    const double m = require_m(spec);
    ojson all = ojson::array();
    if (a.rows() <= kMaxEnumerationDim) {
      for (const PatternEntry& e : enumerate_extremizers(a, m))
        all.push_back(ojson{{"pattern", e.pattern.str()}, {"F", e.F}, {"local_min", e.is_local_min}});
    } else {
      warnings.push_back("combinatorial: n too large to enumerate; greedy search only");
    }
    result["patterns"] = all;
    const Pattern start = Pattern::from_mask(0, a.rows());
    const GreedyResult g = greedy_flip(a, m, start);
    result["greedy"] = ojson{{"start", start.str()},
                             {"pattern", g.pattern.str()},
                             {"F", g.extremizer.F()},
                             {"flips", g.flips},
                             {"certified", g.certified},
                             {"cycled", g.cycled}};
    if (!g.certified) warnings.push_back("combinatorial: greedy search ended without a certified pattern");
    try {
      result["pattern_root"] = pattern_root(a, g.pattern, cfg.target);
    } catch (const std::exception& e) {
      result["pattern_root"] = nullptr;
      warnings.push_back(std::string("combinatorial: ") + e.what());
    }
  } else if (cmd == "shift") {
    Inputs in = load_matrices(spec, false);
    report["input"] = in.echo;
    report["config"] = config_json(spec, cfg);
    if (!spec.alpha) throw std::invalid_argument("cli-io/run_job: 'shift' needs --alpha");
    const ShiftResult s = shift_to_alpha(in.matrices.front(), *spec.alpha, spec.delta, cfg);
    result["ell"] = s.ell;
    result["delta"] = s.delta;
    result["m_star"] = s.m_star;
    result["mu2_shifted"] = mu2(s.shifted);
    result["shifted"] = matrix_to_json(s.shifted);
    ojson hist = ojson::array();
    for (const ShiftStep& h : s.history) hist.push_back(ojson{{"ell", h.ell}, {"m_star", h.m_star}});
    result["history"] = hist;
    if (!s.solve.converged) warnings.push_back("stabilize: final m* solve did not converge");
    out.csv["outer"] = outer_csv(s.solve.trace);
  } else {
    throw std::invalid_argument("cli-io/run_job: unknown command '" + cmd + "'");
  }
  report["result"] = std::move(result);
  report["warnings"] = std::move(warnings);
}

}  // namespace detail

/// Runs the job in memory; nothing is written. See write_job_outputs.
inline JobResult run_job(const JobSpec& spec) {
  JobResult out;
  out.report["schema"] = kReportSchema;
  out.report["command"] = spec.command;
  if (spec.timestamp) out.report["timestamp"] = detail::utc_timestamp();
  auto fail = [&](int code, const char* kind, const std::string& message) {
    out.exit_code = code;
    out.csv.clear();
    out.report.erase("result");
    out.report["error"] = detail::ojson{{"kind", kind}, {"message", message}};
  };
  try {
    detail::run_command(spec, out);
  } catch (const ParseError& e) {
    fail(3, "parse", e.what());
  } catch (const std::invalid_argument& e) {
    fail(3, "input", e.what());
  } catch (const NotContractive& e) {
    fail(2, "not-contractive", e.what());
  } catch (const SolverError& e) {
    fail(2, "solver", e.what());
  } catch (const std::exception& e) {
    fail(2, "solver", e.what());
  }
  return out;
}

/// Writes the report (2-space indent, trailing newline) and CSV files named by the job.
inline void write_job_outputs(const JobSpec& spec, const JobResult& r) {
  if (spec.out_json) {
    std::ofstream f(*spec.out_json, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + *spec.out_json + "'");
    f << r.report.dump(2) << '\n';
  }
  if (spec.out_csv) {
    for (const auto& [suffix, text] : r.csv) {
      const std::string name = *spec.out_csv + "_" + suffix + ".csv";
      std::ofstream f(name, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write '" + name + "'");
      f << text;
    }
  }
}

}  // namespace contractive
