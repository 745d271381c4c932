#pragma once

#include "earstudy/geometry_ear.h"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace earstudy {

// JSON-lines landmark streams: one object per frame with conference_id,
// frame_index, timestamp_s, points (68 [x, y] pairs) and an optional
// 128-entry embedding. A leading {"_meta": ...} record is tolerated so
// pipeline outputs can carry provenance.

nlohmann::json frame_to_json(const FaceLandmarkFrame& frame);
FaceLandmarkFrame frame_from_json(const nlohmann::json& record, std::string_view where);

/// Parses a stream, keeping only records of `conference_id` when given.
/// Timestamps must be nonnegative and nondecreasing per conference.
std::vector<FaceLandmarkFrame> parse_landmark_stream(
    std::istream& in, std::string_view source_name,
    const std::optional<std::string>& conference_id = std::nullopt);

std::vector<FaceLandmarkFrame> read_landmark_stream(
    const std::filesystem::path& path,
    const std::optional<std::string>& conference_id = std::nullopt);

void write_landmark_stream(std::ostream& out, const std::vector<FaceLandmarkFrame>& frames,
                           const nlohmann::json& meta = nullptr);

} // namespace earstudy
