#pragma once

#include "json.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace earstudy {

struct RegressionInput {
    std::vector<double> y;
    std::vector<double> x;
    std::vector<std::string> labels; // row identifiers, may be empty
};

// Univariate OLS fit y = alpha + beta * x with classical standard errors.
// p-values are two-sided from Student's t with n - 2 degrees of freedom.
struct RegressionResult {
    double alpha = 0.0;
    double beta = 0.0;
    double se_alpha = 0.0;
    double se_beta = 0.0;
    double t_alpha = 0.0;
    double t_beta = 0.0;
    double p_alpha = 1.0;
    double p_beta = 1.0;
    double r2 = 0.0;
    double adj_r2 = 0.0;
    double resid_se = 0.0;
    double f_stat = 0.0;
    double p_f = 1.0;
    std::size_t n = 0;
};

/// Throws InsufficientDataError for n < 3 or mismatched lengths,
/// DegenerateRegressorError for constant x, StructuralError for NaN input.
RegressionResult ols_univariate(std::span<const double> x, std::span<const double> y);
RegressionResult ols_univariate(const RegressionInput& input);

/// "***" for p < 0.01, "**" for p < 0.05, "*" for p < 0.1, else "".
std::string significance_stars(double p);

struct RegressionColumn {
    std::string covariate;
    RegressionResult result;
};

struct RenderedTable {
    std::string text;
    std::string csv;
    nlohmann::json json;
};

/// Regression table in the usual journal layout: one model per column,
/// standard errors in parentheses beneath each coefficient, fit statistics
/// at the bottom. Values are rounded to three decimals only in `text`.
RenderedTable render_table(const std::string& dependent_label, std::span<const RegressionColumn> columns);

std::string regression_csv_header();
std::string regression_csv_row(const std::string& dependent_label, std::size_t model,
                               const RegressionColumn& column);
nlohmann::json regression_json(const RegressionColumn& column);

} // namespace earstudy
