#pragma once

#include "earstudy/attention.h"
#include "earstudy/geometry_ear.h"
#include "earstudy/identity.h"
#include "earstudy/market.h"
#include "earstudy/regression.h"
#include "earstudy/timeutil.h"

#include "json.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace earstudy::pipeline {

inline constexpr const char* kToolName = "earstudy";
inline constexpr const char* kToolVersion = "0.1.0";

struct ConferenceRecord {
    std::string conference_id;
    std::chrono::sys_days date{};
    Instant qa_start;
    Instant conference_end;
    std::optional<std::chrono::minutes> trading_close;
    std::optional<double> fps;
    std::filesystem::path landmarks;
    std::filesystem::path transcript;
    std::filesystem::path segments;
    std::filesystem::path prices;

    /// Q&A length in seconds (conference end minus Q&A start).
    double qa_duration_s() const;
};

// Conference catalog. Conferences are kept in date order, which defines the
// sequence for first differences.
struct Registry {
    std::vector<ConferenceRecord> conferences;
    std::string content_hash;

    const ConferenceRecord* find(const std::string& conference_id) const;
};

/// Relative paths resolve against base_dir. Throws ConfigError on schema
/// violations and duplicate ids.
Registry parse_registry(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Registry read_registry(const std::filesystem::path& path);

struct RunConfig {
    std::filesystem::path registry;
    std::filesystem::path gallery;
    std::filesystem::path out_dir = "out";
    std::string target_label = "chair";
    IdentityConfig identity;
    EyeIndexMapping eyes;
    AttentionConfig attention;
    MarketConfig market;
    unsigned jobs = 1;
    bool force = false;

    nlohmann::json to_json() const;
    /// Relative paths in the document resolve against base_dir.
    static RunConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
    static RunConfig load(const std::filesystem::path& path);
};

enum class Stage { identify, ear, attention, eventstudy };
std::string to_string(Stage stage);

/// Hash of the configuration that determines a stage's outputs, chained
/// through its upstream stages.
std::string stage_hash(const RunConfig& config, Stage stage);

struct Exclusion {
    std::string conference_id;
    std::string stage;
    std::string reason;
};

struct StageReport {
    std::vector<Exclusion> exclusions;
    std::vector<std::string> warnings;
};

StageReport cmd_identify(const RunConfig& config);
StageReport cmd_ear(const RunConfig& config);
StageReport cmd_attention(const RunConfig& config);

struct EventStudyReport : StageReport {
    std::string tables_text;
    std::size_t usable_conferences = 0;
};

/// Writes windows, tables and exclusions; echoes the text tables to `echo`
/// when given.
EventStudyReport cmd_eventstudy(const RunConfig& config, std::ostream* echo = nullptr);

/// All four stages in order.
EventStudyReport cmd_run(const RunConfig& config, std::ostream* echo = nullptr);

// Attention table, one row per included conference in date order.
struct AttentionRow {
    std::string conference_id;
    std::string date;
    double Lambda = 0.0;
    double lambda = 0.0;
    std::optional<double> delta_lambda;
    double reading_time_s = 0.0;
    double T_s = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_gaps = 0;
    double fps = 0.0;
    bool lambda_floored = false;
    std::optional<std::size_t> n_questions;
    std::optional<double> n_questions_log;
    std::optional<double> duration_qa_log;
    std::optional<double> duration_chair_speech_log;
    std::optional<double> delta_n_questions_log;
    std::optional<double> delta_duration_qa_log;
    std::optional<double> delta_duration_chair_speech_log;
};

/// Fills the delta columns from consecutive rows.
void fill_deltas(std::vector<AttentionRow>& rows);

std::string attention_csv(const std::vector<AttentionRow>& rows, const std::string& comment_header = {});
std::vector<AttentionRow> parse_attention_csv(std::string_view text, std::string_view source_name);
std::vector<AttentionRow> read_attention_csv(const std::filesystem::path& path);

inline constexpr const char* kCovariates[] = {"d_lambda", "d_n_questions", "d_duration_qa",
                                              "d_duration_chair"};
inline constexpr const char* kDependents[] = {"r_d", "r_a", "(sigma_a - sigma_b)*100"};

struct EventStudyTable {
    std::string dependent;
    std::vector<RegressionColumn> columns;
    std::vector<std::pair<std::string, std::string>> skipped; // covariate, reason
    RenderedTable rendered;
};

struct EventStudyResult {
    std::vector<EventWindowStats> windows;
    std::vector<Exclusion> exclusions;
    std::vector<EventStudyTable> tables;
    std::size_t usable_conferences = 0;
};

using PriceLookup = std::function<const PriceSeries&(const ConferenceRecord&)>;

/// Event windows per conference plus the dependent x covariate grid of
/// univariate regressions. Coverage problems exclude a conference; fewer
/// than three usable conferences throws InsufficientDataError.
EventStudyResult event_study(const std::vector<AttentionRow>& rows, const Registry& registry,
                             const MarketConfig& market, const PriceLookup& prices, unsigned jobs = 1);

/// Provenance comment lines for CSV outputs.
std::string provenance_header(const std::string& stage, const std::string& hash);

} // namespace earstudy::pipeline
