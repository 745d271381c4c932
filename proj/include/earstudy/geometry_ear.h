#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace earstudy {

inline constexpr std::size_t kLandmarkCount = 68;
inline constexpr std::size_t kEmbeddingDim = 128;
inline constexpr std::size_t kEyePointCount = 6;

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

bool is_finite(const Point2& p);
double distance(const Point2& a, const Point2& b);

// Six eye landmarks in l1..l6 order: l1 outer corner, l2/l3 upper lid,
// l4 inner corner, l5/l6 lower lid.
struct EyeLandmarks {
    std::array<Point2, kEyePointCount> points{};
};

// Zero-based start index of each eye's six consecutive points inside the
// 68-point layout.
struct EyeIndexMapping {
    std::size_t left_first = 36;
    std::size_t right_first = 42;
};

struct FaceLandmarkFrame {
    std::string conference_id;
    std::uint64_t frame_index = 0;
    double timestamp_s = 0.0;
    std::vector<Point2> points;
    std::optional<std::vector<double>> embedding;
};

struct EarSample {
    double timestamp_s = 0.0;
    double value = 0.0;
};

struct EyePair {
    EyeLandmarks left;
    EyeLandmarks right;
};

/// Throws StructuralError naming the frame index when the frame does not
/// carry exactly 68 points or the mapping runs past the layout.
EyePair extract_eyes(const FaceLandmarkFrame& frame, const EyeIndexMapping& mapping = {});

/// Eye aspect ratio: (|l2-l6| + |l3-l5|) / (2 |l1-l4|).
/// Throws DegenerateEyeError when the horizontal span is zero or a point is
/// not finite.
double eye_ear(const EyeLandmarks& eye);

/// Mean of both eyes' aspect ratios at the frame timestamp.
EarSample frame_ear(const FaceLandmarkFrame& frame, const EyeIndexMapping& mapping = {});

/// Non-throwing variant for stream processing; returns nullopt for frames
/// with a degenerate eye.
std::optional<EarSample> try_frame_ear(const FaceLandmarkFrame& frame,
                                       const EyeIndexMapping& mapping = {});

struct EarExtraction {
    std::vector<EarSample> samples;
    std::size_t invalid_frames = 0;
};

/// Computes frame EARs for a whole stream, dropping degenerate frames and
/// counting them.
EarExtraction extract_ear_series(const std::vector<FaceLandmarkFrame>& frames,
                                 const EyeIndexMapping& mapping = {});

} // namespace earstudy
