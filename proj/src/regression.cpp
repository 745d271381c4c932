#include "earstudy/regression.h"

#include "earstudy/csv.h"
#include "earstudy/errors.h"
#include "earstudy/student_t.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace earstudy {

namespace {

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

// t statistic with the 0/0 case of an exact fit mapped to 0.
double t_ratio(double coef, double se) {
    if (se > 0.0) {
        return coef / se;
    }
    if (coef == 0.0) {
        return 0.0;
    }
    return std::copysign(std::numeric_limits<double>::infinity(), coef);
}

} // namespace

RegressionResult ols_univariate(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw InsufficientDataError("regression inputs differ in length: " + std::to_string(x.size()) +
                                    " vs " + std::to_string(y.size()));
    }
    const std::size_t n = x.size();
    if (n < 3) {
        throw InsufficientDataError("regression needs at least 3 observations, got " + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw StructuralError("regression input row " + std::to_string(i) + " is not finite");
        }
    }

    const double x_bar = mean(x);
    const double y_bar = mean(y);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - x_bar;
        const double dy = y[i] - y_bar;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) {
        throw DegenerateRegressorError("regressor is constant");
    }

    RegressionResult r;
    r.n = n;
    r.beta = sxy / sxx;
    r.alpha = y_bar - r.beta * x_bar;

    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - r.alpha - r.beta * x[i];
        ssr += e * e;
    }
    const double df = static_cast<double>(n - 2);
    const double sst = syy;
    const double ss_model = r.beta * r.beta * sxx; // equals SST - SSR

    r.resid_se = std::sqrt(ssr / df);
    r.se_beta = r.resid_se / std::sqrt(sxx);
    r.se_alpha = r.resid_se * std::sqrt(1.0 / static_cast<double>(n) + x_bar * x_bar / sxx);
    r.t_alpha = t_ratio(r.alpha, r.se_alpha);
    r.t_beta = t_ratio(r.beta, r.se_beta);
    r.p_alpha = student_t_sf(r.t_alpha, df);
    r.p_beta = student_t_sf(r.t_beta, df);

    if (sst > 0.0) {
        r.r2 = std::clamp(1.0 - ssr / sst, 0.0, 1.0);
    } else {
        r.r2 = 0.0;
    }
    r.adj_r2 = 1.0 - (1.0 - r.r2) * static_cast<double>(n - 1) / df;
    if (ssr > 0.0) {
        r.f_stat = ss_model / (ssr / df);
    } else {
        r.f_stat = ss_model > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    r.p_f = r.p_beta;
    return r;
}

RegressionResult ols_univariate(const RegressionInput& input) {
    if (!input.labels.empty() && input.labels.size() != input.y.size()) {
        throw InsufficientDataError("regression labels do not align with rows");
    }
    return ols_univariate(input.x, input.y);
}

std::string significance_stars(double p) {
    if (p < 0.01) {
        return "***";
    }
    if (p < 0.05) {
        return "**";
    }
    if (p < 0.1) {
        return "*";
    }
    return "";
}

namespace {

std::string fixed3(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

} // namespace

std::string regression_csv_header() {
    return "dependent,model,covariate,n,alpha,se_alpha,t_alpha,p_alpha,beta,se_beta,t_beta,p_beta,"
           "r2,adj_r2,resid_se,f_stat,p_f,stars\n";
}

std::string regression_csv_row(const std::string& dependent_label, std::size_t model,
                               const RegressionColumn& column) {
    const auto& r = column.result;
    std::string row = dependent_label + "," + std::to_string(model) + "," + column.covariate + "," +
                      std::to_string(r.n);
    for (double v : {r.alpha, r.se_alpha, r.t_alpha, r.p_alpha, r.beta, r.se_beta, r.t_beta, r.p_beta, r.r2,
                     r.adj_r2, r.resid_se, r.f_stat, r.p_f}) {
        row += ',';
        row += csv::format_double(v);
    }
    row += ',';
    row += significance_stars(r.p_beta);
    row += '\n';
    return row;
}

nlohmann::json regression_json(const RegressionColumn& column) {
    const auto& r = column.result;
    // JSON has no infinity; exact fits store null for unbounded statistics.
    auto num = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) {
            return v;
        }
        return nullptr;
    };
    return {{"covariate", column.covariate},
            {"n", r.n},
            {"alpha", num(r.alpha)},
            {"se_alpha", num(r.se_alpha)},
            {"t_alpha", num(r.t_alpha)},
            {"p_alpha", num(r.p_alpha)},
            {"beta", num(r.beta)},
            {"se_beta", num(r.se_beta)},
            {"t_beta", num(r.t_beta)},
            {"p_beta", num(r.p_beta)},
            {"r2", num(r.r2)},
            {"adj_r2", num(r.adj_r2)},
            {"resid_se", num(r.resid_se)},
            {"f_stat", num(r.f_stat)},
            {"p_f", num(r.p_f)},
            {"stars", significance_stars(r.p_beta)}};
}

RenderedTable render_table(const std::string& dependent_label, std::span<const RegressionColumn> columns) {
    RenderedTable out;
    const std::size_t k = columns.size();

    std::vector<std::vector<std::string>> rows;
    auto blank_row = [k](std::string label) {
        std::vector<std::string> row(k + 1);
        row[0] = std::move(label);
        return row;
    };

    {
        auto header = blank_row("");
        for (std::size_t j = 0; j < k; ++j) {
            header[j + 1] = "(" + std::to_string(j + 1) + ")";
        }
        rows.push_back(std::move(header));
    }
    {
        auto coef = blank_row("const");
        auto se = blank_row("");
        for (std::size_t j = 0; j < k; ++j) {
            const auto& r = columns[j].result;
            coef[j + 1] = fixed3(r.alpha) + significance_stars(r.p_alpha);
            se[j + 1] = "(" + fixed3(r.se_alpha) + ")";
        }
        rows.push_back(std::move(coef));
        rows.push_back(std::move(se));
    }
    for (std::size_t i = 0; i < k; ++i) {
        auto coef = blank_row(columns[i].covariate);
        auto se = blank_row("");
        const auto& r = columns[i].result;
        coef[i + 1] = fixed3(r.beta) + significance_stars(r.p_beta);
        se[i + 1] = "(" + fixed3(r.se_beta) + ")";
        rows.push_back(std::move(coef));
        rows.push_back(std::move(se));
    }
    const std::size_t separator_at = rows.size();
    auto stat_row = [&](const std::string& label, auto&& cell) {
        auto row = blank_row(label);
        for (std::size_t j = 0; j < k; ++j) {
            row[j + 1] = cell(columns[j].result);
        }
        rows.push_back(std::move(row));
    };
    stat_row("Observations", [](const RegressionResult& r) { return std::to_string(r.n); });
    stat_row("R2", [](const RegressionResult& r) { return fixed3(r.r2); });
    stat_row("Adjusted R2", [](const RegressionResult& r) { return fixed3(r.adj_r2); });
    stat_row("Residual Std. Error", [](const RegressionResult& r) { return fixed3(r.resid_se); });
    stat_row("F Statistic",
             [](const RegressionResult& r) { return fixed3(r.f_stat) + significance_stars(r.p_f); });

    std::vector<std::size_t> width(k + 1, 0);
    for (const auto& row : rows) {
        for (std::size_t j = 0; j <= k; ++j) {
            width[j] = std::max(width[j], row[j].size());
        }
    }
    std::size_t total = width[0];
    for (std::size_t j = 1; j <= k; ++j) {
        width[j] += 2;
        total += width[j];
    }
    const std::string rule(std::max(total, dependent_label.size()), '-');

    std::string& text = out.text;
    text += rule + "\n";
    text += pad_left(dependent_label, total / 2 + dependent_label.size() / 2) + "\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i == 1 || i == separator_at) {
            text += rule + "\n";
        }
        std::string line = pad_right(rows[i][0], width[0]);
        for (std::size_t j = 1; j <= k; ++j) {
            line += pad_left(rows[i][j], width[j]);
        }
        while (!line.empty() && line.back() == ' ') {
            line.pop_back();
        }
        text += line + "\n";
    }
    text += rule + "\n";
    text += "Note: *p<0.1; **p<0.05; ***p<0.01. Classical standard errors in parentheses.\n";

    out.csv = regression_csv_header();
    out.json = {{"dependent", dependent_label}, {"standard_errors", "classical"}, {"models", nlohmann::json::array()}};
    for (std::size_t j = 0; j < k; ++j) {
        out.csv += regression_csv_row(dependent_label, j + 1, columns[j]);
        out.json["models"].push_back(regression_json(columns[j]));
    }
    return out;
}

} // namespace earstudy
