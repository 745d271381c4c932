#pragma once

#include "earstudy/geometry_ear.h"

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace earstudy {

// 128-dim face encoding. Construction validates length and finiteness.
class Embedding {
public:
    Embedding() = default;
    explicit Embedding(std::vector<double> values);

    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }

private:
    std::vector<double> values_;
};

struct GalleryEntry {
    std::string label;
    Embedding embedding;
};

// Labelled reference embeddings, immutable once built.
class Gallery {
public:
    Gallery() = default;
    explicit Gallery(std::vector<GalleryEntry> entries);

    const std::vector<GalleryEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    bool has_label(const std::string& label) const;

private:
    std::vector<GalleryEntry> entries_;
};

enum class NoEmbeddingPolicy { drop, assume_target };

struct IdentityConfig {
    double epsilon = 0.6;
    int min_votes = 1;
    NoEmbeddingPolicy no_embedding = NoEmbeddingPolicy::drop;

    void validate() const;
};

std::string to_string(NoEmbeddingPolicy policy);
NoEmbeddingPolicy parse_no_embedding_policy(const std::string& text);

/// L2 distance. Throws StructuralError on length mismatch.
double embedding_distance(std::span<const double> a, std::span<const double> b);
double embedding_distance(const Embedding& a, const Embedding& b);

/// Element m is 1 iff distance(query, entry m) < epsilon.
std::vector<int> vote_vector(const Embedding& query, const Gallery& gallery, double epsilon);

/// Per-label totals of the vote vector.
std::map<std::string, int> vote_counts(const Embedding& query, const Gallery& gallery, double epsilon);

/// Label with the strictly greatest vote total when that total reaches
/// min_votes; nullopt (Unknown) otherwise, including ties at the top.
std::optional<std::string> classify(const Embedding& query, const Gallery& gallery,
                                    const IdentityConfig& config);

struct IdentityDiagnostics {
    std::size_t total = 0;
    std::size_t kept = 0;
    std::size_t rejected = 0;      // classified as another label
    std::size_t unknown = 0;       // no label won
    std::size_t no_embedding = 0;  // frames without an embedding, kept or not
};

struct SpeakerFilterResult {
    std::vector<FaceLandmarkFrame> frames;
    IdentityDiagnostics diagnostics;
};

/// Keeps frames classified as target_label, preserving order.
/// Throws ConfigError for an empty gallery or a target absent from it.
SpeakerFilterResult filter_speaker_frames(const std::vector<FaceLandmarkFrame>& frames,
                                          const Gallery& gallery, const std::string& target_label,
                                          const IdentityConfig& config);

/// Gallery file: JSON array of {"label": string, "embedding": [128 numbers]}.
Gallery read_gallery(const std::filesystem::path& path);
Gallery parse_gallery(const std::string& text, const std::string& source_name);
std::string gallery_to_json(const Gallery& gallery);

} // namespace earstudy
