#include "earstudy/attention.h"

#include "earstudy/csv.h"
#include "earstudy/errors.h"

#include <algorithm>
#include <cmath>

namespace earstudy {

EarSeries::EarSeries(std::string conference_id, std::vector<EarSample> samples, double nominal_fps)
    : conference_id_(std::move(conference_id)), samples_(std::move(samples)), nominal_fps_(nominal_fps) {
    if (!(nominal_fps_ > 0.0) || !std::isfinite(nominal_fps_)) {
        throw ConfigError(conference_id_ + ": nominal fps must be positive");
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const auto& s = samples_[i];
        if (!std::isfinite(s.value) || s.value < 0.0 || !std::isfinite(s.timestamp_s)) {
            throw StructuralError(conference_id_ + ": EAR sample " + std::to_string(i) +
                                  " is negative or not finite");
        }
        if (i > 0 && !(s.timestamp_s > samples_[i - 1].timestamp_s)) {
            throw StructuralError(conference_id_ + ": EAR timestamps not strictly increasing at sample " +
                                  std::to_string(i));
        }
    }
}

std::vector<EarSeries::Gap> EarSeries::gaps(double gap_factor) const {
    std::vector<Gap> out;
    const double limit = gap_factor / nominal_fps_;
    for (std::size_t i = 1; i < samples_.size(); ++i) {
        if (samples_[i].timestamp_s - samples_[i - 1].timestamp_s > limit) {
            out.push_back({samples_[i - 1].timestamp_s, samples_[i].timestamp_s});
        }
    }
    return out;
}

double estimate_fps(std::span<const EarSample> samples) {
    std::vector<double> spacing;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        const double d = samples[i].timestamp_s - samples[i - 1].timestamp_s;
        if (d > 0.0) {
            spacing.push_back(d);
        }
    }
    if (spacing.empty()) {
        throw InsufficientDataError("cannot estimate frame rate from fewer than two samples");
    }
    auto mid = spacing.begin() + static_cast<std::ptrdiff_t>(spacing.size() / 2);
    std::nth_element(spacing.begin(), mid, spacing.end());
    return 1.0 / *mid;
}

void AttentionConfig::validate() const {
    if (!(threshold_c > 0.0) || !std::isfinite(threshold_c)) {
        throw ConfigError("attention threshold c must be positive");
    }
    if (!(gap_factor > 1.0) || !std::isfinite(gap_factor)) {
        throw ConfigError("attention gap_factor must exceed 1");
    }
    if (floor_policy == LambdaFloorPolicy::epsilon_floor && !(floor_value > 0.0)) {
        throw ConfigError("epsilon_floor policy needs a positive floor value");
    }
}

std::string to_string(LambdaFloorPolicy policy) {
    return policy == LambdaFloorPolicy::error ? "error" : "epsilon_floor";
}

LambdaFloorPolicy parse_lambda_floor_policy(const std::string& text) {
    if (text == "error") {
        return LambdaFloorPolicy::error;
    }
    if (text == "epsilon_floor") {
        return LambdaFloorPolicy::epsilon_floor;
    }
    throw ConfigError("unknown lambda floor policy '" + text + "' (expected error or epsilon_floor)");
}

AttentionIntegral integrate_attention(const EarSeries& series, const AttentionConfig& config) {
    config.validate();
    if (series.empty()) {
        throw InsufficientDataError(series.conference_id() + ": EAR series is empty");
    }
    const double dt = series.sample_period();
    AttentionIntegral out;
    std::size_t below = 0;
    double ear_sum = 0.0;
    for (const auto& s : series.samples()) {
        if (s.value < config.threshold_c) {
            ear_sum += s.value;
            ++below;
        }
    }
    out.n_samples = series.samples().size();
    out.Lambda = ear_sum * dt;
    out.reading_time_s = static_cast<double>(below) * dt;
    out.observed_time_s = static_cast<double>(out.n_samples) * dt;
    out.T_s = series.samples().back().timestamp_s + dt;
    out.n_gaps = series.gaps(config.gap_factor).size();
    return out;
}

LogLevel log_level(double Lambda, const AttentionConfig& config, std::string_view conference_id) {
    if (Lambda > 0.0) {
        return {std::log(Lambda), false};
    }
    if (config.floor_policy == LambdaFloorPolicy::epsilon_floor) {
        return {std::log(std::max(Lambda, config.floor_value)), true};
    }
    throw DomainError(std::string(conference_id) + ": attention measure is " + csv::format_double(Lambda) +
                      ", its log is undefined");
}

std::vector<double> delta_series(std::span<const double> values) {
    if (values.size() < 2) {
        throw InsufficientDataError("a delta series needs at least two values");
    }
    std::vector<double> out;
    out.reserve(values.size() - 1);
    for (std::size_t i = 1; i < values.size(); ++i) {
        out.push_back(values[i] - values[i - 1]);
    }
    return out;
}

SpeakerSegments::SpeakerSegments(std::string conference_id, std::vector<SpeakerSegment> segments)
    : conference_id_(std::move(conference_id)), segments_(std::move(segments)) {
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& s = segments_[i];
        if (!(s.end_s > s.start_s)) {
            throw StructuralError(conference_id_ + ": segment " + std::to_string(i) + " has end <= start");
        }
        if (i > 0 && s.start_s < segments_[i - 1].end_s) {
            throw StructuralError(conference_id_ + ": segment " + std::to_string(i) +
                                  " overlaps or precedes its predecessor");
        }
    }
}

double SpeakerSegments::chair_speech_s() const {
    double total = 0.0;
    for (const auto& s : segments_) {
        if (s.speaker == SpeakerSegment::Speaker::chair) {
            total += s.end_s - s.start_s;
        }
    }
    return total;
}

std::size_t count_questions(std::string_view transcript) {
    return static_cast<std::size_t>(std::count(transcript.begin(), transcript.end(), '?'));
}

BenchmarkVariables benchmark_variables(std::string_view transcript, const SpeakerSegments& segments,
                                       double qa_start_s, double qa_end_s) {
    const std::string& id = segments.conference_id();
    if (!(qa_end_s > qa_start_s)) {
        throw DomainError(id + ": Q&A end must come after its start");
    }
    BenchmarkVariables out;
    out.n_questions = count_questions(transcript);
    if (out.n_questions == 0) {
        throw DomainError(id + ": transcript contains no question marks, log count undefined");
    }
    const double chair = segments.chair_speech_s();
    if (!(chair > 0.0)) {
        throw DomainError(id + ": no chair speaking time, log duration undefined");
    }
    out.n_questions_log = std::log(static_cast<double>(out.n_questions));
    out.duration_qa_log = std::log(qa_end_s - qa_start_s);
    out.duration_chair_speech_log = std::log(chair);
    return out;
}

std::string ear_csv(std::span<const EarSample> samples, std::string_view comment_header) {
    std::string out(comment_header);
    out += "timestamp_s,ear\n";
    for (const auto& s : samples) {
        out += csv::format_double(s.timestamp_s);
        out += ',';
        out += csv::format_double(s.value);
        out += '\n';
    }
    return out;
}

std::vector<EarSample> read_ear_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    if (table.header != std::vector<std::string>{"timestamp_s", "ear"}) {
        throw StructuralError(path.string() + ": expected header 'timestamp_s,ear'");
    }
    std::vector<EarSample> out;
    out.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const std::string where = path.string() + ":" + std::to_string(table.line_numbers[i]);
        out.push_back({csv::to_double(table.rows[i][0], where), csv::to_double(table.rows[i][1], where)});
    }
    return out;
}

SpeakerSegments parse_segments_csv(std::string_view text, std::string_view source_name,
                                   std::string conference_id) {
    const auto table = csv::parse(text, source_name);
    if (table.header != std::vector<std::string>{"start_s", "end_s", "speaker"}) {
        throw StructuralError(std::string(source_name) + ": expected header 'start_s,end_s,speaker'");
    }
    std::vector<SpeakerSegment> segments;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const std::string where = std::string(source_name) + ":" + std::to_string(table.line_numbers[i]);
        const auto& row = table.rows[i];
        SpeakerSegment seg;
        seg.start_s = csv::to_double(row[0], where);
        seg.end_s = csv::to_double(row[1], where);
        if (row[2] == "chair") {
            seg.speaker = SpeakerSegment::Speaker::chair;
        } else if (row[2] == "reporter") {
            seg.speaker = SpeakerSegment::Speaker::reporter;
        } else {
            throw StructuralError(where + ": speaker must be 'chair' or 'reporter'");
        }
        segments.push_back(seg);
    }
    return SpeakerSegments(std::move(conference_id), std::move(segments));
}

SpeakerSegments read_segments_csv(const std::filesystem::path& path, std::string conference_id) {
    return parse_segments_csv(csv::read_text_file(path), path.string(), std::move(conference_id));
}

} // namespace earstudy
