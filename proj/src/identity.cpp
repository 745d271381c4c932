#include "earstudy/identity.h"

#include "earstudy/errors.h"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace earstudy {

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() != kEmbeddingDim) {
        throw StructuralError("embedding must have 128 entries, got " + std::to_string(values_.size()));
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw StructuralError("embedding entry is not finite");
        }
    }
}

Gallery::Gallery(std::vector<GalleryEntry> entries) : entries_(std::move(entries)) {
    for (const auto& e : entries_) {
        if (e.label.empty()) {
            throw ConfigError("gallery entry has an empty label");
        }
        if (e.embedding.size() != kEmbeddingDim) {
            throw ConfigError("gallery entry '" + e.label + "' has no embedding");
        }
    }
}

bool Gallery::has_label(const std::string& label) const {
    for (const auto& e : entries_) {
        if (e.label == label) {
            return true;
        }
    }
    return false;
}

void IdentityConfig::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError("identity epsilon must be a finite nonnegative number");
    }
    if (min_votes < 1) {
        throw ConfigError("identity min_votes must be at least 1");
    }
}

std::string to_string(NoEmbeddingPolicy policy) {
    return policy == NoEmbeddingPolicy::drop ? "drop" : "assume_target";
}

NoEmbeddingPolicy parse_no_embedding_policy(const std::string& text) {
    if (text == "drop") {
        return NoEmbeddingPolicy::drop;
    }
    if (text == "assume_target") {
        return NoEmbeddingPolicy::assume_target;
    }
    throw ConfigError("unknown no-embedding policy '" + text + "' (expected drop or assume_target)");
}

double embedding_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw StructuralError("embedding length mismatch: " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double embedding_distance(const Embedding& a, const Embedding& b) {
    return embedding_distance(a.values(), b.values());
}

std::vector<int> vote_vector(const Embedding& query, const Gallery& gallery, double epsilon) {
    std::vector<int> votes;
    votes.reserve(gallery.size());
    for (const auto& entry : gallery.entries()) {
        votes.push_back(embedding_distance(query, entry.embedding) < epsilon ? 1 : 0);
    }
    return votes;
}

std::map<std::string, int> vote_counts(const Embedding& query, const Gallery& gallery, double epsilon) {
    std::map<std::string, int> counts;
    const auto votes = vote_vector(query, gallery, epsilon);
    for (std::size_t m = 0; m < votes.size(); ++m) {
        if (votes[m] != 0) {
            counts[gallery.entries()[m].label] += 1;
        }
    }
    return counts;
}

std::optional<std::string> classify(const Embedding& query, const Gallery& gallery,
                                    const IdentityConfig& config) {
    const auto counts = vote_counts(query, gallery, config.epsilon);
    const std::string* best = nullptr;
    int best_votes = 0;
    bool tied = false;
    for (const auto& [label, votes] : counts) {
        if (votes > best_votes) {
            best = &label;
            best_votes = votes;
            tied = false;
        } else if (votes == best_votes) {
            tied = true;
        }
    }
    if (best == nullptr || tied || best_votes < config.min_votes) {
        return std::nullopt;
    }
    return *best;
}

SpeakerFilterResult filter_speaker_frames(const std::vector<FaceLandmarkFrame>& frames,
                                          const Gallery& gallery, const std::string& target_label,
                                          const IdentityConfig& config) {
    config.validate();
    if (gallery.empty()) {
        throw ConfigError("identity gallery is empty");
    }
    if (!gallery.has_label(target_label)) {
        throw ConfigError("gallery has no entries for target label '" + target_label + "'");
    }

    SpeakerFilterResult result;
    auto& diag = result.diagnostics;
    for (const auto& frame : frames) {
        ++diag.total;
        if (!frame.embedding) {
            ++diag.no_embedding;
            if (config.no_embedding == NoEmbeddingPolicy::assume_target) {
                ++diag.kept;
                result.frames.push_back(frame);
            }
            continue;
        }
        const Embedding query(*frame.embedding);
        const auto label = classify(query, gallery, config);
        if (!label) {
            ++diag.unknown;
        } else if (*label == target_label) {
            ++diag.kept;
            result.frames.push_back(frame);
        } else {
            ++diag.rejected;
        }
    }
    return result;
}

Gallery parse_gallery(const std::string& text, const std::string& source_name) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(source_name + ": invalid JSON: " + e.what());
    }
    if (!doc.is_array()) {
        throw ConfigError(source_name + ": gallery must be a JSON array");
    }
    std::vector<GalleryEntry> entries;
    entries.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        const std::string where = source_name + "[" + std::to_string(i) + "]";
        if (!item.is_object() || !item.contains("label") || !item["label"].is_string() ||
            !item.contains("embedding") || !item["embedding"].is_array()) {
            throw ConfigError(where + ": expected {\"label\": string, \"embedding\": [numbers]}");
        }
        std::vector<double> values;
        for (const auto& v : item["embedding"]) {
            if (!v.is_number()) {
                throw ConfigError(where + ": embedding entries must be numbers");
            }
            values.push_back(v.get<double>());
        }
        try {
            entries.push_back({item["label"].get<std::string>(), Embedding(std::move(values))});
        } catch (const StructuralError& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    return Gallery(std::move(entries));
}

Gallery read_gallery(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open gallery " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_gallery(buffer.str(), path.string());
}

std::string gallery_to_json(const Gallery& gallery) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& e : gallery.entries()) {
        doc.push_back({{"label", e.label},
                       {"embedding", std::vector<double>(e.embedding.values().begin(),
                                                         e.embedding.values().end())}});
    }
    return doc.dump() + "\n";
}

} // namespace earstudy
