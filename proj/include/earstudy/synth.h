#pragma once

#include "earstudy/attention.h"
#include "earstudy/geometry_ear.h"
#include "earstudy/identity.h"
#include "earstudy/market.h"
#include "earstudy/rng.h"
#include "earstudy/timeutil.h"

#include "json.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

// Deterministic fixture generators. Every output is a pure function of the
// spec and its seed.
namespace earstudy::synth {

struct Interval {
    double start_s = 0.0;
    double end_s = 0.0;
};

struct ReadingEpisode {
    double start_s = 0.0;
    double end_s = 0.0;
    double ear_level = 0.0;
};

struct LabelledInterval {
    double start_s = 0.0;
    double end_s = 0.0;
    std::string label;
};

struct PriceSpec {
    double base_price = 1500.0;
    double vol_per_min = 0.0006;
    double drift_during_qa = 0.0; // log drift per minute inside [tau2, tau3]
    double vol_after_factor = 1.0;
};

struct TimelineSpec {
    Instant qa_start = parse_instant("2020-04-29T14:30:00-04:00");
    Instant conference_end = parse_instant("2020-04-29T15:15:00-04:00");
    std::chrono::minutes trading_close{16 * 60};
    std::chrono::minutes session_open{9 * 60 + 30};
};

struct ScenarioSpec {
    std::string conference_id = "conf";
    std::uint64_t seed = 1;
    double fps = 10.0;
    double conference_length_s = 60.0;
    std::vector<ReadingEpisode> reading_episodes;
    double baseline_ear = 0.3;
    double blink_rate_hz = 0.0;
    double blink_duration_s = 0.2;
    std::vector<Interval> gap_intervals;
    // Time not covered by the script shows the target.
    std::vector<LabelledInterval> identity_script;
    std::string target_label = "chair";
    PriceSpec price;
    TimelineSpec timeline;
    int n_questions = 20;

    /// Throws ConfigError for overlapping or out-of-range intervals,
    /// episode levels not below baseline, or non-positive rates.
    void validate() const;
};

// Piecewise-constant scripted EAR. `visible` is false inside gaps and while
// the script shows someone other than the target.
struct LevelPiece {
    double start_s = 0.0;
    double end_s = 0.0;
    double ear = 0.0;
    bool visible = true;
};

struct LandmarkGroundTruth {
    std::string conference_id;
    double fps = 0.0;
    std::string target_label;
    std::vector<Interval> blinks;
    std::vector<LevelPiece> pieces;
    std::vector<std::uint64_t> target_frames;
    std::size_t frame_count = 0;

    /// Continuous integral of EAR * 1{EAR < c} over visible time.
    double analytic_lambda(double c) const;
    /// Continuous visible time with EAR < c.
    double analytic_reading_time(double c) const;
    std::size_t sub_threshold_intervals(double c) const;
};

/// Script evaluation without drawing frames.
LandmarkGroundTruth build_ground_truth(const ScenarioSpec& spec);

/// Scripted EAR level at time t (episodes, blinks at 0, else baseline).
double scripted_level(const ScenarioSpec& spec, const LandmarkGroundTruth& truth, double t);

/// 68 landmarks whose frame EAR equals `ear` (eye span fixed at 30 px,
/// symmetric lids).
std::vector<Point2> face_with_ear(double ear);

class GalleryModel {
public:
    GalleryModel() = default;
    GalleryModel(std::vector<std::string> labels, std::vector<std::vector<double>> centers, double radius);

    const std::vector<std::string>& labels() const { return labels_; }
    double radius() const { return radius_; }
    bool has_label(const std::string& label) const;
    /// Cluster member for label, quantized to 1e-5.
    std::vector<double> draw(const std::string& label, Rng& rng) const;

private:
    std::vector<std::string> labels_;
    std::vector<std::vector<double>> centers_;
    double radius_ = 0.0;
};

struct GallerySpec {
    std::vector<std::string> labels{"chair", "reporter", "other"};
    double cluster_radius = 0.05;
    double separation = 1.0;
    int per_label = 10;
    int queries_per_label = 5;
    std::uint64_t seed = 1;
};

struct LabelledEmbedding {
    std::string label;
    Embedding embedding;
};

struct GeneratedGallery {
    Gallery gallery;
    std::vector<LabelledEmbedding> queries;
    GalleryModel model;
};

/// Gaussian clusters around mutually orthogonal centers `separation` apart.
/// Throws ConfigError unless separation > 4 * cluster_radius.
GeneratedGallery gen_gallery(const GallerySpec& spec);

struct GeneratedStream {
    std::vector<FaceLandmarkFrame> frames;
    LandmarkGroundTruth truth;
};

/// Frames at the scenario fps; gaps emit nothing. With a model, each frame
/// carries an embedding from its scripted identity's cluster.
GeneratedStream gen_landmark_stream(const ScenarioSpec& spec, const GalleryModel* model = nullptr);

struct PriceGroundTruth {
    ConferenceTimeline timeline;
    long qa_minutes = 0;
    double r_d_expected = 0.0;
    double sigma_b = 0.0;
    double sigma_a = 0.0;
};

struct GeneratedPrices {
    PriceSeries series;
    PriceGroundTruth truth;
};

/// One-minute geometric random walk from session open to the trading close.
/// Drift applies to minutes inside [tau2, tau3]; minutes after tau3 have
/// volatility scaled by vol_after_factor.
GeneratedPrices gen_price_series(const ScenarioSpec& spec);

struct QaTexts {
    std::string transcript;
    std::string segments_csv;
};

/// Transcript with n_questions question marks and alternating
/// reporter/chair segments spanning the Q&A.
QaTexts gen_qa_texts(const ScenarioSpec& spec);

// Fixture suites: 'conferences' lists explicit scenarios; a 'suite' block
// expands into date-ordered conferences with planted links between the
// attention measure and returns / volatility.
struct SuiteSpec {
    int n_conferences = 45;
    std::string start_date = "2011-04-27";
    int spacing_days = 56;
    std::string utc_offset = "-04:00";
    std::string qa_start = "14:30";
    int qa_minutes_min = 35;
    int qa_minutes_max = 55;
    std::string trading_close = "16:00";
    double fps = 2.0;
    double conference_length_s = 300.0;
    double baseline_ear = 0.3;
    double reading_level = 0.15;
    double blink_rate_hz = 0.05;
    double blink_duration_s = 0.2;
    double lambda_mean = 1.5;
    double lambda_sd = 0.37;
    std::string reporter_label = "reporter";
    double alpha = 0.0;
    double beta = 0.005;
    double target_r2 = 0.3;
    std::optional<double> vol_per_min; // derived from target_r2 when absent
    double vol_after_base = 1.0;
    double vol_lambda_loading = 0.0; // factor = base * exp(loading * dlambda)
    double base_price = 1500.0;
};

struct PlantedConference {
    std::string conference_id;
    double Lambda = 0.0;
    double lambda = 0.0;
    std::optional<double> delta_lambda;
    double r_d_mean = 0.0;
    double vol_after_factor = 1.0;
};

struct FixtureSpec {
    std::uint64_t seed = 1;
    std::string target_label = "chair";
    GallerySpec gallery;
    std::vector<ScenarioSpec> conferences;
    std::vector<PlantedConference> planted;
    std::vector<double> ground_truth_c{0.2};
    double identity_epsilon = 0.5;
    double threshold_c = 0.2;
    std::optional<double> vol_per_min;
};

/// Expands a suite into scenarios with planted effects.
FixtureSpec expand_suite(const SuiteSpec& suite, std::uint64_t seed, FixtureSpec base = {});

/// Reads a scenario JSON document; `seed_override` replaces its seed.
FixtureSpec parse_fixture_spec(const nlohmann::json& doc, std::optional<std::uint64_t> seed_override = {});
FixtureSpec read_fixture_spec(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = {});

/// Named presets: "planted" (attention drives returns and a volatility drop)
/// and "null" (no effect).
FixtureSpec preset(const std::string& name, std::uint64_t seed);
SuiteSpec preset_suite(const std::string& name);

nlohmann::json scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::json suite_to_json(const SuiteSpec& suite);
SuiteSpec suite_from_json(const nlohmann::json& j);

struct FixtureSummary {
    std::size_t conferences = 0;
    std::size_t frames = 0;
    std::size_t price_bars = 0;
};

/// Writes gallery.json, landmarks/, transcripts/, segments/, prices/,
/// registry.json, ground_truth.json and config.json into dir.
FixtureSummary write_fixture(const FixtureSpec& spec, const std::filesystem::path& dir);

} // namespace earstudy::synth
