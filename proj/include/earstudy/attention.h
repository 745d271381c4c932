#pragma once

#include "earstudy/geometry_ear.h"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace earstudy {

// Time-ordered EAR samples for one conference. Spacing wider than
// gap_factor / nominal_fps marks a gap (the speaker was off camera).
class EarSeries {
public:
    EarSeries(std::string conference_id, std::vector<EarSample> samples, double nominal_fps);

    const std::string& conference_id() const { return conference_id_; }
    const std::vector<EarSample>& samples() const { return samples_; }
    double nominal_fps() const { return nominal_fps_; }
    double sample_period() const { return 1.0 / nominal_fps_; }
    bool empty() const { return samples_.empty(); }

    struct Gap {
        double from_s;
        double to_s;
    };
    std::vector<Gap> gaps(double gap_factor) const;

private:
    std::string conference_id_;
    std::vector<EarSample> samples_;
    double nominal_fps_;
};

/// Median-spacing frame rate estimate; used when the registry omits fps.
double estimate_fps(std::span<const EarSample> samples);

enum class LambdaFloorPolicy { error, epsilon_floor };

struct AttentionConfig {
    double threshold_c = 0.2;
    double gap_factor = 3.0;
    LambdaFloorPolicy floor_policy = LambdaFloorPolicy::error;
    double floor_value = 1e-6;

    void validate() const;
};

std::string to_string(LambdaFloorPolicy policy);
LambdaFloorPolicy parse_lambda_floor_policy(const std::string& text);

struct AttentionIntegral {
    double Lambda = 0.0;          // sum of EAR * 1{EAR < c} * dt, EAR-seconds
    double reading_time_s = 0.0;  // sum of 1{EAR < c} * dt
    double observed_time_s = 0.0; // sample count * dt
    double T_s = 0.0;             // end of the last sample's interval
    std::size_t n_samples = 0;
    std::size_t n_gaps = 0;
};

/// Left Riemann sum of the thresholded EAR with dt = 1 / nominal_fps.
/// Gaps hold no samples and therefore contribute nothing.
AttentionIntegral integrate_attention(const EarSeries& series, const AttentionConfig& config);

struct LogLevel {
    double value = 0.0;
    bool floored = false;
};

/// Natural log of Lambda. Under the error policy Lambda <= 0 throws a
/// DomainError naming the conference; epsilon_floor substitutes the floor.
LogLevel log_level(double Lambda, const AttentionConfig& config, std::string_view conference_id = {});

/// First differences: out[i] = values[i+1] - values[i].
std::vector<double> delta_series(std::span<const double> values);

struct SpeakerSegment {
    double start_s = 0.0;
    double end_s = 0.0;
    enum class Speaker { chair, reporter } speaker = Speaker::chair;
};

class SpeakerSegments {
public:
    SpeakerSegments() = default;
    SpeakerSegments(std::string conference_id, std::vector<SpeakerSegment> segments);

    const std::string& conference_id() const { return conference_id_; }
    const std::vector<SpeakerSegment>& segments() const { return segments_; }
    double chair_speech_s() const;

private:
    std::string conference_id_;
    std::vector<SpeakerSegment> segments_;
};

struct BenchmarkVariables {
    double n_questions_log = 0.0;
    double duration_qa_log = 0.0;
    double duration_chair_speech_log = 0.0;
    std::size_t n_questions = 0;
};

std::size_t count_questions(std::string_view transcript);

/// Log question count, log Q&A length and log chair speaking time.
/// Throws DomainError when any of the three would be log(0).
BenchmarkVariables benchmark_variables(std::string_view transcript, const SpeakerSegments& segments,
                                       double qa_start_s, double qa_end_s);

// File formats: EAR series CSV `timestamp_s,ear`; segments CSV
// `start_s,end_s,speaker` with speaker in {chair, reporter}.
std::string ear_csv(std::span<const EarSample> samples, std::string_view comment_header = {});
std::vector<EarSample> read_ear_csv(const std::filesystem::path& path);
SpeakerSegments read_segments_csv(const std::filesystem::path& path, std::string conference_id);
SpeakerSegments parse_segments_csv(std::string_view text, std::string_view source_name,
                                   std::string conference_id);

} // namespace earstudy
