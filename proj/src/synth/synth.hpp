#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "core/clustering.hpp"
#include "core/feature_set.hpp"
#include "json.hpp"

namespace qm {

// Gaussian blobs around an evenly spaced grid, one sample per image per blob.
struct SynthConfig {
  std::size_t n_clusters = 25;
  std::size_t per_cluster = 10;
  std::size_t dim = 2;
  double spread = 0.25;  // per-coordinate standard deviation
  double extent = 10.0;  // grid spans [0, extent] in the first two coordinates
  std::uint64_t seed = 1;

  void check() const;
  nlohmann::json to_json() const;
};

struct SynthData {
  FeatureSet features;
  Clustering truth;
  std::vector<std::vector<double>> centers;
};

// Blob c sample j becomes feature (image j, index c), so every blob holds one
// feature per image. Centers sit on a ceil(sqrt(n)) x ceil(sqrt(n)) grid in
// the first two coordinates (a line for dim 1), remaining coordinates 0.
SynthData generate_blobs(const SynthConfig& cfg);

// Object-detection scenario: image 0 is the reference view of an object; the
// remaining images either show the object (positive) or only background.
struct DetectionConfig {
  std::size_t dim = 128;  // SIFT-sized descriptors
  std::size_t object_points = 12;
  std::size_t background_points = 150;
  std::size_t positive_images = 30;
  std::size_t negative_images = 30;
  double object_visibility = 0.6;       // chance an object point shows in a positive image
  std::size_t background_per_image = 10;
  std::size_t reference_background = 10;  // clutter in the reference view
  double extent = 10.0;
  double spread = 4.0;  // high enough that both matchers make errors
  std::uint64_t seed = 7;

  nlohmann::json to_json() const;
};

struct DetectionData {
  FeatureSet features;
  std::int64_t reference_image = 0;
  std::vector<std::int64_t> query_images;
  std::vector<bool> contains_object;  // per query image
};

DetectionData generate_detection(const DetectionConfig& cfg);

}  // namespace qm
