#include "sgfem/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "sgfem/driver.hpp"
#include "sgfem/trace_io.hpp"

namespace sgfem::cli {

namespace {

const std::vector<std::string>& run_keys() {
  static const std::vector<std::string> keys{"criterion", "theta_x",  "theta_p", "vartheta", "tol",
                                             "solver_tol", "max_iter", "max_dof", "output",   "with_reference"};
  return keys;
}

struct RunConfig {
  driver::RunOptions options;
  model::ProblemConfig problem;
  std::string output;
  bool with_reference = false;
};

// Raw flag strings; empty means "not given".
struct FlagValues {
  std::string config, criterion, theta_x, theta_p, vartheta, tol, sigma, tau, amplitude, mesh, solver_tol,
      max_iter, max_dof, output, quadrature;
  bool with_reference = false;
  bool verbose = false;
};

void add_common_flags(CLI::App& app, FlagValues& f, bool sweep) {
  app.add_option("--config", f.config, "key = value configuration file (flags override it)");
  app.add_option("--criterion", f.criterion, sweep ? "Marking criteria, e.g. A,B,C,D" : "Marking criterion A|B|C|D");
  app.add_option("--theta-x", f.theta_x, sweep ? "Spatial Dörfler parameter(s)" : "Spatial Dörfler parameter");
  app.add_option("--theta-p", f.theta_p, sweep ? "Parametric marking parameter(s)" : "Parametric marking parameter");
  app.add_option("--vartheta", f.vartheta, sweep ? "Weight(s) between refinement types" : "Weight between refinement types");
  app.add_option("--tol", f.tol, "Stop once the estimate falls below this");
  app.add_option("--sigma", f.sigma, "Decay exponent of the coefficient expansion");
  app.add_option("--tau", f.tau, "Sum of relative mode amplitudes (< 1)");
  app.add_option("--amplitude", f.amplitude, "Mode amplitude A (alternative to --tau)");
  app.add_option("--mesh", f.mesh, "Initial mesh: lshape, square or a mesh file");
  app.add_option("--solver-tol", f.solver_tol, "Relative PCG tolerance");
  app.add_option("--max-iter", f.max_iter, "Iteration cap");
  app.add_option("--max-dof", f.max_dof, "Cap on the total number of unknowns");
  app.add_option("--quadrature", f.quadrature, "Coefficient integration: exact or degree5");
  app.add_option("--output", f.output, sweep ? "Output directory" : "Trace CSV path (stdout when omitted)");
  app.add_flag("--with-reference", f.with_reference, "Compute a reference solution and effectivity indices");
  app.add_flag("--verbose", f.verbose, "Per-iteration progress on stderr");
}

model::KeyValues merged_values(const FlagValues& f) {
  model::KeyValues kv;
  if (!f.config.empty()) kv = model::read_key_values_file(f.config);
  if (!f.tau.empty() && !f.amplitude.empty()) {
    throw InputDomainError("--tau and --amplitude are mutually exclusive");
  }
  if (!f.tau.empty()) kv.erase("amplitude");
  if (!f.amplitude.empty()) kv.erase("tau");
  auto set = [&](const char* key, const std::string& value) {
    if (!value.empty()) kv[key] = value;
  };
  set("criterion", f.criterion);
  set("theta_x", f.theta_x);
  set("theta_p", f.theta_p);
  set("vartheta", f.vartheta);
  set("tol", f.tol);
  set("sigma", f.sigma);
  set("tau", f.tau);
  set("amplitude", f.amplitude);
  set("mesh", f.mesh);
  set("solver_tol", f.solver_tol);
  set("max_iter", f.max_iter);
  set("max_dof", f.max_dof);
  set("output", f.output);
  set("quadrature", f.quadrature);
  if (f.with_reference) kv["with_reference"] = "true";
  return kv;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  const double d = model::parse_double(key, value);
  if (d < 0.0 || d != std::floor(d)) throw InputDomainError("'" + key + "' expects a nonnegative integer");
  return static_cast<std::size_t>(d);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw InputDomainError("'" + key + "' expects true or false");
}

RunConfig build_config(const model::KeyValues& kv) {
  RunConfig cfg{driver::RunOptions{}, model::problem_from_config(kv, run_keys()), "", false};
  auto& o = cfg.options;
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("criterion")) o.criterion = marking::parse_criterion(*v);
  if (auto v = get("theta_x")) o.params.theta_x = model::parse_double("theta_x", *v);
  if (auto v = get("theta_p")) o.params.theta_p = model::parse_double("theta_p", *v);
  if (auto v = get("vartheta")) o.params.vartheta = model::parse_double("vartheta", *v);
  if (auto v = get("tol")) o.tol = model::parse_double("tol", *v);
  if (auto v = get("solver_tol")) o.solver.tol = model::parse_double("solver_tol", *v);
  if (auto v = get("max_iter")) o.max_iter = parse_count("max_iter", *v);
  if (auto v = get("max_dof")) o.max_dof = parse_count("max_dof", *v);
  if (auto v = get("output")) cfg.output = *v;
  if (auto v = get("with_reference")) cfg.with_reference = parse_bool("with_reference", *v);
  if (!(o.tol >= 0.0)) throw InputDomainError("tol must be nonnegative");
  if (!(o.solver.tol > 0.0)) throw InputDomainError("solver_tol must be positive");
  o.params.validate(o.criterion);
  o.initial_mesh = model::load_mesh(cfg.problem.mesh);
  return cfg;
}

std::string config_echo(const RunConfig& cfg) {
  const auto& o = cfg.options;
  std::ostringstream s;
  s << "# criterion = " << marking::to_char(o.criterion) << '\n'
    << "# theta_x = " << io::format_double(o.params.theta_x) << '\n'
    << "# theta_p = " << io::format_double(o.params.theta_p) << '\n'
    << "# vartheta = " << io::format_double(o.params.vartheta) << '\n'
    << "# tol = " << io::format_double(o.tol) << '\n'
    << "# sigma = " << io::format_double(cfg.problem.spec.sigma()) << '\n'
    << "# amplitude = " << io::format_double(cfg.problem.spec.amplitude()) << '\n'
    << "# mesh = " << cfg.problem.mesh << '\n'
    << "# solver_tol = " << io::format_double(o.solver.tol) << '\n'
    << "# max_iter = " << o.max_iter << '\n'
    << "# max_dof = " << o.max_dof << '\n';
  return s.str();
}

driver::AdaptiveTrace execute(const RunConfig& cfg, std::ostream* progress) {
  driver::RunOptions options = cfg.options;
  if (progress) {
    options.on_iteration = [progress](const driver::IterationRecord& r) {
      *progress << "iter " << r.iter << "  N = " << r.n_total << "  eta = " << io::format_double(r.eta) << "  "
                << marking::to_string(r.refinement) << '\n';
    };
  }
  driver::AdaptiveTrace trace = driver::run_adaptive(cfg.problem.spec, options);
  if (cfg.with_reference) {
    const auto ref = driver::reference_solution(trace, cfg.problem.spec, options.solver);
    driver::apply_reference(trace, galerkin::energy_norm_sq(ref, cfg.problem.spec));
  }
  return trace;
}

std::string json_path_for(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  return p.string();
}

int exit_code(const driver::AdaptiveTrace& trace) {
  return trace.stop == driver::StopReason::ToleranceReached || trace.stop == driver::StopReason::ZeroEstimate
             ? kExitTolerance
             : kExitCap;
}

int run_command(const FlagValues& f, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = build_config(merged_values(f));
  err << config_echo(cfg);
  const driver::AdaptiveTrace trace = execute(cfg, f.verbose ? &err : nullptr);
  std::ostringstream csv;
  io::write_csv(csv, trace);
  if (cfg.output.empty() || cfg.output == "-") {
    out << csv.str();
  } else {
    io::write_file_atomic(cfg.output, csv.str());
    std::ostringstream json;
    io::write_json(json, trace, cfg.problem.mesh);
    io::write_file_atomic(json_path_for(cfg.output), json.str());
  }
  err << "# stop = " << driver::to_string(trace.stop) << ", L = " << trace.records.size() - 1
      << ", eta = " << io::format_double(trace.records.back().eta) << ", cost = " << trace.cost() << '\n';
  return exit_code(trace);
}

std::string tag(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SGFEM_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

int sweep_command(const FlagValues& f, std::ostream& out, std::ostream& err) {
  FlagValues base = f;
  base.criterion = base.theta_x = base.theta_p = base.vartheta = base.output = "";
  model::KeyValues kv = merged_values(base);
  const model::KeyValues file_kv = f.config.empty() ? model::KeyValues{} : model::read_key_values_file(f.config);
  auto axis = [&](const std::string& flag, const char* key, const char* fallback) {
    if (!flag.empty()) return flag;
    auto it = file_kv.find(key);
    return it == file_kv.end() ? std::string(fallback) : it->second;
  };
  std::vector<marking::Criterion> criteria;
  {
    std::stringstream s(axis(f.criterion, "criterion", "A"));
    std::string item;
    while (std::getline(s, item, ',')) criteria.push_back(marking::parse_criterion(item));
  }
  const auto theta_x = parse_range(axis(f.theta_x, "theta_x", "0.5"));
  const auto theta_p = parse_range(axis(f.theta_p, "theta_p", "0.5"));
  const auto vartheta = parse_range(axis(f.vartheta, "vartheta", "1"));
  const std::string dir = f.output.empty() ? "sweep" : f.output;
  kv.erase("output");

  struct Point {
    marking::Criterion criterion;
    double tx, tp, vt;
    std::string file;
    RunConfig cfg;
    std::optional<driver::AdaptiveTrace> trace;
    std::string error;
  };
  std::vector<Point> points;
  for (auto c : criteria) {
    for (double tx : theta_x) {
      for (double tp : theta_p) {
        for (double vt : vartheta) {
          model::KeyValues point_kv = kv;
          point_kv["criterion"] = std::string(1, marking::to_char(c));
          point_kv["theta_x"] = io::format_double(tx);
          point_kv["theta_p"] = io::format_double(tp);
          point_kv["vartheta"] = io::format_double(vt);
          std::string file = std::string("crit") + marking::to_char(c) + "_thx" + tag(tx) + "_thp" + tag(tp) +
                             "_vt" + tag(vt) + ".csv";
          points.push_back({c, tx, tp, vt, file, build_config(point_kv), std::nullopt, ""});
        }
      }
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      Point& p = points[i];
      try {
        p.trace = execute(p.cfg, nullptr);
        std::ostringstream csv;
        io::write_csv(csv, *p.trace);
        io::write_file_atomic((std::filesystem::path(dir) / p.file).string(), csv.str());
      } catch (const std::exception& e) {
        p.error = e.what();
      }
      std::lock_guard lock(log_mutex);
      err << "# " << p.file << (p.error.empty() ? " done" : " failed: " + p.error) << '\n';
    }
  };
  std::vector<std::thread> pool;
  const std::size_t workers = worker_count(points.size());
  for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream summary;
  summary << "criterion,theta_x,theta_p,vartheta,iterations,cost,rate,final_eta,stop\n";
  int code = kExitTolerance;
  for (const Point& p : points) {
    summary << marking::to_char(p.criterion) << ',' << tag(p.tx) << ',' << tag(p.tp) << ',' << tag(p.vt) << ',';
    if (!p.trace) {
      summary << ",,,,error\n";
      code = kExitError;
      continue;
    }
    std::string rate;
    try {
      rate = io::format_double(driver::fit_rate(*p.trace));
    } catch (const InputDomainError&) {
    }
    summary << p.trace->records.size() - 1 << ',' << p.trace->cost() << ',' << rate << ','
            << io::format_double(p.trace->records.back().eta) << ',' << driver::to_string(p.trace->stop) << '\n';
    if (code == kExitTolerance && exit_code(*p.trace) != kExitTolerance) code = kExitCap;
  }
  io::write_file_atomic((std::filesystem::path(dir) / "summary.csv").string(), summary.str());
  out << summary.str();
  return code;
}

}  // namespace

std::vector<double> parse_range(const std::string& text) {
  std::vector<double> out;
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    std::stringstream s(text);
    std::string item;
    while (std::getline(s, item, ',')) out.push_back(model::parse_double("range", item));
    if (out.empty()) throw InputDomainError("empty value list");
    return out;
  }
  const double a = model::parse_double("range", text.substr(0, dots));
  std::string rest = text.substr(dots + 2);
  double step = 0.1;
  if (const auto colon = rest.find(':'); colon != std::string::npos) {
    step = model::parse_double("range step", rest.substr(colon + 1));
    rest = rest.substr(0, colon);
  }
  const double b = model::parse_double("range", rest);
  if (!(step > 0.0) || b < a) throw InputDomainError("range '" + text + "' is empty or has a nonpositive step");
  for (int k = 0;; ++k) {
    const double v = std::round((a + k * step) * 1e12) / 1e12;
    if (v > b + 1e-12) break;
    out.push_back(v);
  }
  return out;
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive stochastic Galerkin FEM for parametric diffusion"};
  app.require_subcommand(1);
  FlagValues run_flags, sweep_flags;
  CLI::App* run = app.add_subcommand("run", "Run the adaptive algorithm once and write its trace");
  add_common_flags(*run, run_flags, false);
  CLI::App* sweep = app.add_subcommand("sweep", "Run a grid of marking parameters");
  add_common_flags(*sweep, sweep_flags, true);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  try {
    if (run->parsed()) return run_command(run_flags, out, err);
    return sweep_command(sweep_flags, out, err);
  } catch (const InputDomainError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const InadmissibleProblem& e) {
    err << "error: inadmissible problem: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace sgfem::cli
