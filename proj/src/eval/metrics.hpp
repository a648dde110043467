#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "core/clustering.hpp"
#include "core/feature_set.hpp"
#include "json.hpp"

namespace qm {

struct SplitReport {
  std::vector<double> quality;  // Q per canonical cluster
  std::size_t contested_cluster_count = 0;
  double p_contested = 0.0;
  // Features in clusters with Q < 1.
  std::size_t split_feature_count = 0;

  // Filled only when a detected contested set is supplied.
  std::optional<std::size_t> detected_count;  // contested features
  std::optional<double> p_split;              // contested / split features, may exceed 1
  // Fraction of split-cluster features inside the detected set (capped recall).
  std::optional<double> split_recall;

  nlohmann::json to_json() const;
};

// Q(C) = max_a |C ∩ owner^-1(a)| / |C|. `owner` is indexed by row of `fs`.
// `detected`, when given, is a per-row flag for the contested set.
SplitReport split_quality(const Clustering& clustering, const FeatureSet& fs,
                          std::span<const std::size_t> owner,
                          const std::vector<bool>* detected = nullptr);

struct ClusterDiff {
  std::vector<Cluster> only_in_a;
  std::vector<Cluster> only_in_b;
};

struct ComparisonReport {
  bool exact_equal = false;
  double pairwise_f1 = 0.0;
  double pairwise_precision = 0.0;  // b as prediction, a as reference
  double pairwise_recall = 0.0;
  std::size_t pairs_a = 0;
  std::size_t pairs_b = 0;
  std::size_t pairs_both = 0;
  ClusterDiff diff;

  nlohmann::json to_json() const;
};

// Exact equality up to relabeling and F1 over the induced same-cluster pair
// relation. Two clusterings without any pairs score F1 = 1. Throws InputError
// if they cover different features.
ComparisonReport compare_clusterings(const Clustering& a, const Clustering& b);

struct PairMatch {
  std::size_t query = 0;  // row in the query set
  std::size_t train = 0;  // row in the train set
  double distance = 0.0;
};

struct RatioTestOptions {
  double ratio = 0.75;
  // Only used when the train side has a single feature.
  double max_distance = std::numeric_limits<double>::infinity();
};

// Brute-force nearest / second-nearest with the ratio test d1 < ratio * d2.
// With a single train feature the ratio is undefined; the nearest is kept
// when d1 <= max_distance.
std::vector<PairMatch> baseline_ratio_match(const FeatureSet& query, const FeatureSet& train,
                                            const RatioTestOptions& opts = {});

struct PRPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t detections = 0;
};

struct PRCurve {
  std::vector<PRPoint> points;  // in threshold order
  double auc = 0.0;

  nlohmann::json to_json() const;
};

// An image is detected when its count is strictly above the threshold.
// Precision with no detections is 1. AUC: trapezoid over (recall, precision)
// sorted by recall. Throws InputError when there is no positive image.
PRCurve pr_curve(std::span<const double> counts, const std::vector<bool>& truth,
                 std::span<const double> thresholds);

// Thresholds covering every distinct count plus one below the minimum.
std::vector<double> default_thresholds(std::span<const double> counts);

}  // namespace qm
