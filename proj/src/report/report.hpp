#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/clustering.hpp"
#include "distributed/distributed.hpp"
#include "eval/metrics.hpp"
#include "json.hpp"
#include "match/quickmatch.hpp"
#include "synth/synth.hpp"

namespace qm {

// One column of the centralized-vs-distributed table.
struct SweepRow {
  std::size_t agents = 1;
  double compute_time_per_agent_s = 0.0;
  double post_qp_time_per_agent_s = 0.0;
  std::optional<double> qp_time_per_agent_s;  // none for a single agent
  double percent_contested_clusters = 0.0;
  std::size_t clusters_found = 0;
  std::optional<double> percent_contested_features_found;  // capped recall, percent
  std::optional<double> p_split;                           // raw contested / split-feature ratio
  std::size_t cluster_transfers = 0;
  std::optional<double> pairwise_f1_vs_reference;
  std::optional<bool> equal_to_reference;

  nlohmann::json to_json() const;
};

// Reference: the clustering split quality is measured on (normally the
// centralized run on the same features).
SweepRow sweep_row(const FeatureSet& fs, const DistributedResult& run,
                     const Clustering& reference);

// Row for a centralized run (one agent, nothing contested).
SweepRow sweep_row_centralized(const Clustering& clustering, double seconds);

std::string sweep_csv_header();
std::string sweep_csv_line(const SweepRow& row);

nlohmann::json match_report(const FeatureSet& fs, const MatchParams& params,
                            const Clustering& clustering, double seconds);

nlohmann::json dmatch_report(const FeatureSet& fs, const DistributedParams& params,
                             const DistributedResult& run, const Clustering* reference);

// FNV-1a of the report with every "timing" member removed.
std::uint64_t report_digest(const nlohmann::json& report);

// Number of query-image features that share a cluster with a feature of the
// reference image, per query image.
std::vector<double> quickmatch_detection_counts(const DetectionData& data,
                                                const Clustering& clustering);

// Number of ratio-test matches from each query image into the reference image.
std::vector<double> baseline_detection_counts(const DetectionData& data,
                                              const RatioTestOptions& opts = {});

}  // namespace qm
