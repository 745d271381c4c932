#include "earstudy/market.h"

#include "earstudy/csv.h"
#include "earstudy/errors.h"

#include <algorithm>
#include <cmath>

namespace earstudy {

PriceSeries::PriceSeries(std::vector<PriceBar> bars) : bars_(std::move(bars)) {
    for (std::size_t i = 0; i < bars_.size(); ++i) {
        const auto& bar = bars_[i];
        if (!(bar.price > 0.0) || !std::isfinite(bar.price)) {
            throw StructuralError("price bar at " + format_instant(bar.timestamp) + " has a non-positive price");
        }
        if (i > 0 && !(bars_[i - 1].timestamp < bar.timestamp)) {
            throw StructuralError("price bars not strictly increasing at " + format_instant(bar.timestamp));
        }
    }
}

std::size_t PriceSeries::index_after(const Instant& t) const {
    const auto it = std::upper_bound(bars_.begin(), bars_.end(), t,
                                     [](const Instant& value, const PriceBar& bar) { return value < bar.timestamp; });
    return static_cast<std::size_t>(it - bars_.begin());
}

std::size_t PriceSeries::index_at_or_before(const Instant& t) const {
    const std::size_t after = index_after(t);
    return after == 0 ? npos : after - 1;
}

PriceSeries parse_price_csv(std::string_view text, std::string_view source_name) {
    const auto table = csv::parse(text, source_name);
    if (table.header != std::vector<std::string>{"timestamp", "price"}) {
        throw StructuralError(std::string(source_name) + ": expected header 'timestamp,price'");
    }
    std::vector<PriceBar> bars;
    bars.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const std::string where = std::string(source_name) + ":" + std::to_string(table.line_numbers[i]);
        try {
            bars.push_back({parse_instant(table.rows[i][0]), csv::to_double(table.rows[i][1], where)});
        } catch (const StructuralError& e) {
            throw StructuralError(where + ": " + e.what());
        }
    }
    return PriceSeries(std::move(bars));
}

PriceSeries read_price_csv(const std::filesystem::path& path) {
    return parse_price_csv(csv::read_text_file(path), path.string());
}

std::string price_csv(const PriceSeries& series) {
    std::string out = "timestamp,price\n";
    for (const auto& bar : series.bars()) {
        out += format_instant(bar.timestamp);
        out += ',';
        out += csv::format_double(bar.price);
        out += '\n';
    }
    return out;
}

ConferenceTimeline build_timeline(const Instant& qa_start, const Instant& conference_end,
                                  const Instant& trading_close) {
    if (!(qa_start < conference_end)) {
        throw ConfigError("conference end " + format_instant(conference_end) + " is not after Q&A start " +
                          format_instant(qa_start));
    }
    if (!(conference_end < trading_close)) {
        throw ConfigError("trading close " + format_instant(trading_close) + " is not after conference end " +
                          format_instant(conference_end));
    }
    return {shifted(qa_start, -kPreWindow), qa_start, conference_end, trading_close};
}

double price_at(const PriceSeries& series, const Instant& t) {
    const std::size_t i = series.index_at_or_before(t);
    if (i == PriceSeries::npos) {
        throw CoverageError("no price bar at or before " + format_instant(t));
    }
    return series.bars()[i].price;
}

double window_log_return(const PriceSeries& series, const Instant& from, const Instant& to) {
    return std::log(price_at(series, to) / price_at(series, from));
}

RealizedVol realized_vol(const PriceSeries& series, const Instant& from, const Instant& to) {
    const std::size_t first = series.index_after(from);
    const std::size_t end = series.index_after(to);
    RealizedVol out;
    if (end <= first + 1) {
        throw CoverageError("fewer than two price bars in (" + format_instant(from) + ", " +
                            format_instant(to) + "]");
    }
    const auto& bars = series.bars();
    double sum_sq = 0.0;
    for (std::size_t i = first + 1; i < end; ++i) {
        const double r = std::log(bars[i].price / bars[i - 1].price);
        sum_sq += r * r;
    }
    out.n_returns = end - first - 1;
    out.sigma = std::sqrt(sum_sq / static_cast<double>(out.n_returns));
    return out;
}

namespace {

void require_fresh(const PriceSeries& series, const Instant& t, const MarketConfig& config,
                   const std::string& what) {
    const std::size_t i = series.index_at_or_before(t);
    if (i == PriceSeries::npos) {
        throw CoverageError(what + ": no price bar at or before " + format_instant(t));
    }
    if (t.utc - series.bars()[i].timestamp.utc > config.max_staleness) {
        throw CoverageError(what + ": latest bar before " + format_instant(t) + " is stale (" +
                            format_instant(series.bars()[i].timestamp) + ")");
    }
}

} // namespace

EventWindowStats event_window_stats(const PriceSeries& series, const ConferenceTimeline& timeline,
                                    std::string conference_id, const MarketConfig& config) {
    const std::string prefix = conference_id.empty() ? std::string() : conference_id + ": ";
    require_fresh(series, timeline.tau1, config, prefix + "tau1");
    require_fresh(series, timeline.tau2, config, prefix + "tau2");
    require_fresh(series, timeline.tau3, config, prefix + "tau3");
    require_fresh(series, timeline.tau4, config, prefix + "tau4");

    EventWindowStats stats;
    stats.conference_id = std::move(conference_id);
    stats.timeline = timeline;
    stats.r_d = window_log_return(series, timeline.tau2, timeline.tau3);
    stats.r_a = window_log_return(series, timeline.tau3, timeline.tau4);
    RealizedVol before;
    RealizedVol after;
    try {
        before = realized_vol(series, timeline.tau1, timeline.tau2);
    } catch (const CoverageError& e) {
        throw CoverageError(prefix + "pre-Q&A volatility window (tau1, tau2]: " + e.what());
    }
    try {
        after = realized_vol(series, timeline.tau3, timeline.tau4);
    } catch (const CoverageError& e) {
        throw CoverageError(prefix + "post-conference volatility window (tau3, tau4]: " + e.what());
    }
    stats.sigma_b = before.sigma;
    stats.sigma_a = after.sigma;
    stats.n_returns_b = before.n_returns;
    stats.n_returns_a = after.n_returns;
    stats.vol_change = stats.sigma_a - stats.sigma_b;
    return stats;
}

} // namespace earstudy
