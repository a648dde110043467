#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/feature_set.hpp"

namespace qm {

using Cluster = std::vector<FeatureId>;

// Multi-image match set: a partition of the features into clusters holding at
// most one feature per image. Pairwise matches are implied (every pair inside
// a cluster), which gives symmetry and cycle consistency for free.
struct Clustering {
  std::vector<Cluster> clusters;
  // Algorithm and parameters that produced the clusters.
  nlohmann::json provenance = nlohmann::json::object();

  std::size_t feature_count() const;

  // Members sorted; clusters ordered by smallest member.
  void canonicalize();
  Clustering canonical() const;

  // Same clusters up to relabeling and member order. Provenance is ignored.
  bool same_partition(const Clustering& other) const;
};

// Throws ValidationError naming the offending feature or cluster unless the
// clusters partition `source` with at most one feature per image each.
void validate(const Clustering& c, const FeatureSet& source);

// One feature per image per cluster, no feature twice; no source needed.
void validate_structure(const Clustering& c);

// Per-row cluster label (index into canonical cluster order).
std::vector<std::size_t> labels_by_row(const Clustering& c, const FeatureSet& source);

// Builds a clustering from per-row labels. Label values only need to be
// consistent, not contiguous.
Clustering from_labels(const FeatureSet& source, std::span<const std::int64_t> labels);

// `{ "clusters": [[[i,k],...],...], "meta": {...} }`, canonical order.
std::string to_json(const Clustering& c);
Clustering clustering_from_json(const std::string& text, const std::string& source = "<json>");

// Validates against `source` (when given) before writing.
void save_clustering(const Clustering& c, const std::filesystem::path& path,
                     const FeatureSet* source = nullptr);
Clustering load_clustering(const std::filesystem::path& path);

// Ground-truth label file: `image_id feature_id label` per line.
std::string format_labels(const Clustering& c);
Clustering parse_labels(const std::string& text, const std::string& source = "<labels>");
Clustering load_labels(const std::filesystem::path& path);

}  // namespace qm
