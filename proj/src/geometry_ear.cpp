#include "earstudy/geometry_ear.h"

#include "earstudy/errors.h"

#include <cmath>

namespace earstudy {

bool is_finite(const Point2& p) {
    return std::isfinite(p.x) && std::isfinite(p.y);
}

double distance(const Point2& a, const Point2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

namespace {

EyeLandmarks eye_at(const std::vector<Point2>& points, std::size_t first) {
    EyeLandmarks eye;
    for (std::size_t i = 0; i < kEyePointCount; ++i) {
        eye.points[i] = points[first + i];
    }
    return eye;
}

} // namespace

EyePair extract_eyes(const FaceLandmarkFrame& frame, const EyeIndexMapping& mapping) {
    if (frame.points.size() != kLandmarkCount) {
        throw StructuralError("frame " + std::to_string(frame.frame_index) + ": expected " +
                              std::to_string(kLandmarkCount) + " landmarks, got " +
                              std::to_string(frame.points.size()));
    }
    if (mapping.left_first + kEyePointCount > kLandmarkCount ||
        mapping.right_first + kEyePointCount > kLandmarkCount) {
        throw StructuralError("frame " + std::to_string(frame.frame_index) +
                              ": eye index mapping exceeds the 68-point layout");
    }
    return {eye_at(frame.points, mapping.left_first), eye_at(frame.points, mapping.right_first)};
}

double eye_ear(const EyeLandmarks& eye) {
    const auto& l = eye.points;
    for (const auto& p : l) {
        if (!is_finite(p)) {
            throw DegenerateEyeError("eye landmark is not finite");
        }
    }
    const double horizontal = distance(l[0], l[3]);
    if (!(horizontal > 0.0)) {
        throw DegenerateEyeError("eye corners coincide (zero horizontal span)");
    }
    const double vertical = distance(l[1], l[5]) + distance(l[2], l[4]);
    return vertical / (2.0 * horizontal);
}

EarSample frame_ear(const FaceLandmarkFrame& frame, const EyeIndexMapping& mapping) {
    const EyePair eyes = extract_eyes(frame, mapping);
    const double left = eye_ear(eyes.left);
    const double right = eye_ear(eyes.right);
    return {frame.timestamp_s, (left + right) / 2.0};
}

std::optional<EarSample> try_frame_ear(const FaceLandmarkFrame& frame,
                                       const EyeIndexMapping& mapping) {
    try {
        return frame_ear(frame, mapping);
    } catch (const DegenerateEyeError&) {
        return std::nullopt;
    }
}

EarExtraction extract_ear_series(const std::vector<FaceLandmarkFrame>& frames,
                                 const EyeIndexMapping& mapping) {
    EarExtraction out;
    out.samples.reserve(frames.size());
    for (const auto& frame : frames) {
        if (auto sample = try_frame_ear(frame, mapping)) {
            out.samples.push_back(*sample);
        } else {
            ++out.invalid_frames;
        }
    }
    return out;
}

} // namespace earstudy
