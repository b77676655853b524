#include "mvoed/report_io.hpp"

#include <fstream>

#include <fmt/format.h>

#include "mvoed/error.hpp"

namespace mvoed {
namespace {

std::string design_columns(std::size_t d) {
  std::string out;
  for (std::size_t k = 0; k < d; ++k) out += fmt::format("xi_{},", k);
  return out;
}

std::string design_values(const DesignPoint& x) {
  std::string out;
  for (Eigen::Index k = 0; k < x.coords.size(); ++k) out += format_real(x.coords[k]) + ",";
  return out;
}

}  // namespace

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

std::string report_csv_header(std::size_t design_dim) {
  return design_columns(design_dim) +
         "u_hat,m2a,m2b,m2c,m2_hat,v_hat,j_hat,N,M1,M2,lambda,seed,dropped_count";
}

std::string report_csv_row(const EstimateReport& r) {
  return design_values(r.design) +
         fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}", format_real(r.u_hat),
                     format_real(r.m2a), format_real(r.m2b), format_real(r.m2c),
                     format_real(r.m2_hat), format_real(r.v_hat), format_real(r.j_hat),
                     r.config.n_outer, r.config.m1, r.config.m2, format_real(r.config.lambda),
                     r.bank_seed, r.dropped);
}

std::string trace_csv_header(std::size_t design_dim) {
  return "iteration," + design_columns(design_dim) + "j_hat,u_hat,v_hat,best_so_far";
}

std::string trace_csv_row(const TraceEntry& e) {
  return fmt::format("{},", e.iteration) + design_values(e.report.design) +
         fmt::format("{},{},{},{}", format_real(e.report.j_hat), format_real(e.report.u_hat),
                     format_real(e.report.v_hat), format_real(e.best_so_far));
}

std::string rate_csv(const RateStudy& study) {
  std::string out = "rung,n,mean,variance,bias,truth\n";
  for (std::size_t k = 0; k < study.rungs.size(); ++k) {
    const RateRung& r = study.rungs[k];
    out += fmt::format("{},{},{},{},{},{}\n", k, r.n, format_real(r.mean), format_real(r.variance),
                       format_real(r.bias), format_real(study.truth));
  }
  return out;
}

std::string rate_summary(const RateStudy& study) {
  const auto slope = [](auto fit) {
    try {
      return fmt::format("{:.4f}", fit().slope);
    } catch (const EstimationError&) {
      return std::string("nan");
    }
  };
  return fmt::format("estimator={} truth={} ({}) variance_slope={} bias_slope={}",
                     to_string(study.tag), format_real(study.truth),
                     study.truth_is_closed_form ? "closed-form" : "reference estimate",
                     slope([&] { return study.variance_fit(); }),
                     slope([&] { return study.bias_fit(); }));
}

std::string crs_csv(const std::vector<DesignPoint>& grid, const CrsStudy& study) {
  std::string out = "index,xi_0,v_with_crs,v_without_crs\n";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out += fmt::format("{},{},{},{}\n", k, format_real(grid[k].coords[0]),
                       format_real(study.v_with_crs[k]), format_real(study.v_without_crs[k]));
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << content;
  out.flush();
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace mvoed
