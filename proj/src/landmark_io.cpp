#include "earstudy/landmark_io.h"

#include "earstudy/errors.h"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <istream>

namespace earstudy {

using nlohmann::json;

json frame_to_json(const FaceLandmarkFrame& frame) {
    json record;
    record["conference_id"] = frame.conference_id;
    record["frame_index"] = frame.frame_index;
    record["timestamp_s"] = frame.timestamp_s;
    json points = json::array();
    for (const auto& p : frame.points) {
        points.push_back(json::array({p.x, p.y}));
    }
    record["points"] = std::move(points);
    if (frame.embedding) {
        record["embedding"] = *frame.embedding;
    }
    return record;
}

namespace {

[[noreturn]] void malformed(std::string_view where, const std::string& what) {
    throw StructuralError(std::string(where) + ": " + what);
}

double finite_number(const json& value, std::string_view where, const char* field) {
    if (!value.is_number()) {
        malformed(where, std::string(field) + " is not a number");
    }
    const double v = value.get<double>();
    if (!std::isfinite(v)) {
        malformed(where, std::string(field) + " is not finite");
    }
    return v;
}

} // namespace

FaceLandmarkFrame frame_from_json(const json& record, std::string_view where) {
    if (!record.is_object()) {
        malformed(where, "record is not a JSON object");
    }
    FaceLandmarkFrame frame;

    const auto idx = record.find("frame_index");
    if (idx == record.end() || !idx->is_number_integer() || idx->get<long long>() < 0) {
        malformed(where, "frame_index must be a nonnegative integer");
    }
    frame.frame_index = idx->get<std::uint64_t>();
    const std::string label = std::string(where) + " (frame " + std::to_string(frame.frame_index) + ")";

    const auto cid = record.find("conference_id");
    if (cid == record.end() || !cid->is_string()) {
        malformed(label, "conference_id must be a string");
    }
    frame.conference_id = cid->get<std::string>();

    const auto ts = record.find("timestamp_s");
    if (ts == record.end()) {
        malformed(label, "missing timestamp_s");
    }
    frame.timestamp_s = finite_number(*ts, label, "timestamp_s");
    if (frame.timestamp_s < 0.0) {
        malformed(label, "timestamp_s is negative");
    }

    const auto pts = record.find("points");
    if (pts == record.end() || !pts->is_array()) {
        malformed(label, "points must be an array");
    }
    if (pts->size() != kLandmarkCount) {
        malformed(label, "expected 68 points, got " + std::to_string(pts->size()));
    }
    frame.points.reserve(kLandmarkCount);
    for (const auto& pair : *pts) {
        if (!pair.is_array() || pair.size() != 2) {
            malformed(label, "each point must be an [x, y] pair");
        }
        frame.points.push_back({finite_number(pair[0], label, "x"), finite_number(pair[1], label, "y")});
    }

    const auto emb = record.find("embedding");
    if (emb != record.end() && !emb->is_null()) {
        if (!emb->is_array() || emb->size() != kEmbeddingDim) {
            malformed(label, "embedding must hold exactly 128 numbers");
        }
        std::vector<double> values;
        values.reserve(kEmbeddingDim);
        for (const auto& v : *emb) {
            values.push_back(finite_number(v, label, "embedding entry"));
        }
        frame.embedding = std::move(values);
    }
    return frame;
}

std::vector<FaceLandmarkFrame> parse_landmark_stream(std::istream& in, std::string_view source_name,
                                                     const std::optional<std::string>& conference_id) {
    std::vector<FaceLandmarkFrame> frames;
    std::map<std::string, double> last_timestamp;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = std::string(source_name) + ":" + std::to_string(line_no);
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            malformed(where, std::string("invalid JSON: ") + e.what());
        }
        if (record.is_object() && record.contains("_meta")) {
            continue;
        }
        FaceLandmarkFrame frame = frame_from_json(record, where);
        if (conference_id && frame.conference_id != *conference_id) {
            continue;
        }
        auto [it, inserted] = last_timestamp.try_emplace(frame.conference_id, frame.timestamp_s);
        if (!inserted) {
            if (frame.timestamp_s < it->second) {
                malformed(where, "frame " + std::to_string(frame.frame_index) +
                                     ": timestamps decrease within conference " + frame.conference_id);
            }
            it->second = frame.timestamp_s;
        }
        frames.push_back(std::move(frame));
    }
    return frames;
}

std::vector<FaceLandmarkFrame> read_landmark_stream(const std::filesystem::path& path,
                                                    const std::optional<std::string>& conference_id) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open landmark stream " + path.string());
    }
    return parse_landmark_stream(in, path.string(), conference_id);
}

void write_landmark_stream(std::ostream& out, const std::vector<FaceLandmarkFrame>& frames,
                           const json& meta) {
    if (!meta.is_null()) {
        out << json{{"_meta", meta}}.dump() << '\n';
    }
    for (const auto& frame : frames) {
        out << frame_to_json(frame).dump() << '\n';
    }
}

} // namespace earstudy
