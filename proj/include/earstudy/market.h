#pragma once

#include "earstudy/timeutil.h"

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace earstudy {

struct PriceBar {
    Instant timestamp;
    double price = 0.0;
};

// Strictly increasing, positive-priced bar series; immutable after load.
class PriceSeries {
public:
    PriceSeries() = default;
    explicit PriceSeries(std::vector<PriceBar> bars);

    const std::vector<PriceBar>& bars() const { return bars_; }
    bool empty() const { return bars_.empty(); }

    /// Index of the latest bar with timestamp <= t, or npos.
    std::size_t index_at_or_before(const Instant& t) const;
    /// Index of the first bar with timestamp > t (bars_.size() if none).
    std::size_t index_after(const Instant& t) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::vector<PriceBar> bars_;
};

PriceSeries parse_price_csv(std::string_view text, std::string_view source_name);
PriceSeries read_price_csv(const std::filesystem::path& path);
std::string price_csv(const PriceSeries& series);

struct ConferenceTimeline {
    Instant tau1; // two hours before the Q&A starts
    Instant tau2; // Q&A start
    Instant tau3; // end of the press conference
    Instant tau4; // end of the trading day
};

inline constexpr std::chrono::minutes kPreWindow{120};

/// Throws ConfigError unless qa_start < conference_end < trading_close.
ConferenceTimeline build_timeline(const Instant& qa_start, const Instant& conference_end,
                                  const Instant& trading_close);

/// Price of the latest bar at or before t; CoverageError naming t otherwise.
double price_at(const PriceSeries& series, const Instant& t);

/// log(P(to) / P(from)).
double window_log_return(const PriceSeries& series, const Instant& from, const Instant& to);

struct RealizedVol {
    double sigma = 0.0;
    std::size_t n_returns = 0;
};

/// Root mean square of consecutive-bar log returns whose both endpoints lie
/// in (from, to]. CoverageError when the window holds no return.
RealizedVol realized_vol(const PriceSeries& series, const Instant& from, const Instant& to);

struct MarketConfig {
    std::chrono::minutes trading_close{16 * 60};
    // A price lookup older than this relative to the requested instant is a
    // coverage gap.
    std::chrono::minutes max_staleness{5};
};

struct EventWindowStats {
    std::string conference_id;
    ConferenceTimeline timeline;
    double r_d = 0.0;
    double r_a = 0.0;
    double sigma_b = 0.0;
    double sigma_a = 0.0;
    double vol_change = 0.0;
    std::size_t n_returns_b = 0;
    std::size_t n_returns_a = 0;
};

/// Returns over [tau2, tau3] and [tau3, tau4], realized vols over
/// (tau1, tau2] and (tau3, tau4]. Coverage errors name the offending window.
EventWindowStats event_window_stats(const PriceSeries& series, const ConferenceTimeline& timeline,
                                    std::string conference_id = {},
                                    const MarketConfig& config = {});

} // namespace earstudy
