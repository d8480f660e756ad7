// contractive: command-line front end for the solvers in include/contractive.
//
//   contractive mstar --builtin ex2 --out-json r.json --out-csv r
//   contractive bound --builtin ex4 --T 2 --m 0.2

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "contractive/job.hpp"

int main(int argc, char** argv) {
  contractive::JobSpec spec;
  CLI::App app{"Contractivity floors, extremizers and amplification bounds for diagonal-scaled weight matrices"};
  app.add_option("command", spec.command, "mu2 | mstar | extremizer | multilayer | timevary | bound | combinatorial | shift")
      ->required()
      ->check(CLI::IsMember(contractive::job_commands()));

  std::vector<std::string> builtin_names = contractive::builtins::matrix_names();
  for (const std::string& n : contractive::builtins::path_names()) builtin_names.push_back(n);
  app.add_option("--builtin", spec.builtin, "Built-in matrix or path")->check(CLI::IsMember(builtin_names));
  app.add_option("--input", spec.inputs, "Matrix file (CSV or JSON), repeat once per layer; or a path JSON file");

  auto opt = [&](const char* name, std::optional<double>& dst, const char* help) {
    app.add_option_function<double>(name, [&dst](double v) { dst = v; }, help);
  };
  opt("--m", spec.m, "Floor m in [0, 1] (extremizer, multilayer, bound, combinatorial)");
  opt("--target", spec.target, "Target level: solve λ[m*] = -target (default 0)");
  opt("--alpha", spec.alpha, "Required floor for shift, in (0, 1]");
  opt("--delta", spec.delta, "Shift increment (default 0.05 |mu2(A)|)");
  opt("--dt", spec.dt, "Grid step for built-in paths");
  opt("--T", spec.T, "Horizon for built-in paths");
  opt("--m0", spec.m0, "Starting floor for the outer Newton iteration");
  opt("--tol-m", spec.tol_m, "Bracket width at which the outer solve stops");
  opt("--tol-phi", spec.tol_phi, "Residual at which the outer solve stops");
  app.add_option_function<int>("--restarts", [&spec](int v) { spec.restarts = v; }, "Extra inner-flow starts");
  app.add_option_function<std::string>("--out-json", [&spec](const std::string& v) { spec.out_json = v; },
                                       "Write the JSON report here (default: stdout)");
  app.add_option_function<std::string>("--out-csv", [&spec](const std::string& v) { spec.out_csv = v; },
                                       "Prefix for CSV traces");
  bool no_timestamp = false;
  app.add_flag("--no-timestamp", no_timestamp, "Omit the timestamp so reports are byte-identical across runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }
  spec.timestamp = !no_timestamp;

  const contractive::JobResult result = contractive::run_job(spec);
  try {
    contractive::write_job_outputs(spec, result);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  if (!spec.out_json) std::cout << result.report.dump(2) << '\n';
  if (result.exit_code != 0) std::cerr << "error: " << result.report["error"]["message"].get<std::string>() << '\n';
  return result.exit_code;
}
