#pragma once

// CSV output. Column order is fixed; numbers use %.17g so that rows
// round-trip exactly.
//
//   report:  xi_0..xi_{d-1}, u_hat, m2a, m2b, m2c, m2_hat, v_hat, j_hat,
//            N, M1, M2, lambda, seed, dropped_count
//   trace:   iteration, xi_0..xi_{d-1}, j_hat, u_hat, v_hat, best_so_far
//   rates:   rung, n, mean, variance, bias, truth
//   crs:     index, xi_0, v_with_crs, v_without_crs

#include <filesystem>
#include <string>
#include <vector>

#include "mvoed/bayes_opt.hpp"
#include "mvoed/convergence.hpp"
#include "mvoed/estimators.hpp"

namespace mvoed {

std::string format_real(double value);

std::string report_csv_header(std::size_t design_dim);
std::string report_csv_row(const EstimateReport& report);

std::string trace_csv_header(std::size_t design_dim);
std::string trace_csv_row(const TraceEntry& entry);

std::string rate_csv(const RateStudy& study);
/// One line: estimator, truth kind, fitted variance and bias slopes.
std::string rate_summary(const RateStudy& study);

std::string crs_csv(const std::vector<DesignPoint>& grid, const CrsStudy& study);

/// Writes `content` to `path`, replacing it. Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace mvoed
