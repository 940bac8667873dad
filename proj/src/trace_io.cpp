#include "sgfem/trace_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

namespace sgfem::io {

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::string& csv_header() {
  static const std::string header =
      "iter,refine_type,dim_x,card_p,n_total,eta,eta_spatial,eta_param,energy_sq,marked,max_active_dim,"
      "solver_iters,cum_cost,zeta";
  return header;
}

void write_csv(std::ostream& os, const driver::AdaptiveTrace& trace) {
  os << csv_header() << '\n';
  for (const auto& r : trace.records) {
    os << r.iter << ',' << marking::to_string(r.refinement) << ',' << r.dim_x << ',' << r.card_p << ','
       << r.n_total << ',' << format_double(r.eta) << ',' << format_double(r.eta_spatial) << ','
       << format_double(r.eta_param) << ',' << format_double(r.energy_sq) << ',' << r.marked << ','
       << r.max_active_dim << ',' << r.solver_iters << ',' << r.cum_cost << ',';
    if (r.zeta) os << format_double(*r.zeta);
    os << '\n';
  }
}

void write_json(std::ostream& os, const driver::AdaptiveTrace& trace, const std::string& mesh_source) {
  using nlohmann::json;
  const auto& o = trace.options;
  json doc;
  doc["config"] = {{"criterion", std::string(1, marking::to_char(o.criterion))},
                   {"theta_x", o.params.theta_x},
                   {"theta_p", o.params.theta_p},
                   {"vartheta", o.params.vartheta},
                   {"tol", o.tol},
                   {"sigma", trace.sigma},
                   {"amplitude", trace.amplitude},
                   {"tau", trace.tau},
                   {"mesh", mesh_source},
                   {"solver_tol", o.solver.tol},
                   {"solver_max_iter", o.solver.max_iter},
                   {"max_iter", o.max_iter},
                   {"max_dof", o.max_dof}};
  json summary = {{"stop", driver::to_string(trace.stop)},
                  {"iterations", trace.records.empty() ? 0 : trace.records.size() - 1},
                  {"cost", trace.cost()},
                  {"lambda", trace.lambda},
                  {"Lambda", trace.Lambda},
                  {"K", driver::AdaptiveTrace::K},
                  {"reference_energy", optional_json(trace.reference_energy)},
                  {"max_contraction", optional_json(trace.max_contraction)},
                  {"final_indices", param::dump(trace.final_indices)}};
  try {
    summary["rate"] = driver::fit_rate(trace);
  } catch (const InputDomainError&) {
    summary["rate"] = nullptr;
  }
  summary["contraction_ratios"] = trace.contraction_ratios;
  doc["summary"] = std::move(summary);
  json records = json::array();
  for (const auto& r : trace.records) {
    records.push_back({{"iter", r.iter},
                       {"refine_type", marking::to_string(r.refinement)},
                       {"marking_case", std::string(1, r.marking_case)},
                       {"dim_x", r.dim_x},
                       {"card_p", r.card_p},
                       {"n_total", r.n_total},
                       {"eta", r.eta},
                       {"eta_spatial", r.eta_spatial},
                       {"eta_param", r.eta_param},
                       {"energy_sq", r.energy_sq},
                       {"marked", r.marked},
                       {"max_active_dim", r.max_active_dim},
                       {"solver_iters", r.solver_iters},
                       {"solver_residual", r.solver_residual},
                       {"cum_cost", r.cum_cost},
                       {"weighted_parametric", r.weighted_parametric},
                       {"spatial_quantity", r.spatial_quantity},
                       {"weak_checks", r.weak_checks},
                       {"step_estimate_sq", optional_json(r.step_estimate_sq)},
                       {"diff_energy_sq", optional_json(r.diff_energy_sq)},
                       {"pythagoras_defect", optional_json(r.pythagoras_defect)},
                       {"reduction_ratio", optional_json(r.reduction_ratio)},
                       {"zeta", optional_json(r.zeta)},
                       {"wall_seconds", r.wall_seconds}});
  }
  doc["records"] = std::move(records);
  os << doc.dump(2) << '\n';
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace sgfem::io
