#include "report/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "core/error.hpp"

namespace qm {

namespace {

template <typename T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

void strip_timing(nlohmann::json& j) {
  if (j.is_object()) {
    j.erase("timing");
    for (auto& [key, value] : j.items()) strip_timing(value);
  } else if (j.is_array()) {
    for (auto& value : j) strip_timing(value);
  }
}

nlohmann::json agent_json(const AgentStats& s) {
  return {{"id", s.id},
          {"features_initial", s.features_initial},
          {"features_final", s.features_final},
          {"local_clusters", s.local_clusters},
          {"contested_features", s.contested_features},
          {"contested_clusters", s.contested_clusters},
          {"clusters_sent", s.clusters_sent},
          {"clusters_received", s.clusters_received},
          {"clusters_accepted", s.clusters_accepted},
          {"final_clusters", s.final_clusters},
          {"sigma_a", s.sigma_a},
          {"timing",
           {{"cluster_s", s.timings.cluster_s},
            {"boundary_s", s.timings.boundary_s},
            {"finalize_s", s.timings.finalize_s}}}};
}

}  // namespace

nlohmann::json SweepRow::to_json() const {
  return {{"number_of_agents", agents},
          {"timing",
           {{"compute_time_per_agent_s", compute_time_per_agent_s},
            {"post_qp_compute_time_per_agent_s", post_qp_time_per_agent_s},
            {"qp_time_per_agent_s", opt(qp_time_per_agent_s)}}},
          {"percent_contested_clusters", percent_contested_clusters},
          {"number_of_clusters_found", clusters_found},
          {"percent_contested_features_found", opt(percent_contested_features_found)},
          {"p_split_raw", opt(p_split)},
          {"cluster_transfers", cluster_transfers},
          {"pairwise_f1_vs_reference", opt(pairwise_f1_vs_reference)},
          {"equal_to_reference", opt(equal_to_reference)}};
}

SweepRow sweep_row(const FeatureSet& fs, const DistributedResult& run,
                     const Clustering& reference) {
  SweepRow row;
  const std::size_t m = run.agents.size();
  row.agents = m;
  double compute = 0.0, qp = 0.0;
  for (const auto& a : run.agents) {
    compute += a.timings.cluster_s + a.timings.boundary_s + a.timings.finalize_s;
    qp += a.timings.boundary_s;
  }
  row.compute_time_per_agent_s = compute / static_cast<double>(m);
  row.post_qp_time_per_agent_s = (compute - qp) / static_cast<double>(m);
  if (m > 1) row.qp_time_per_agent_s = qp / static_cast<double>(m);

  std::vector<bool> raw(fs.size(), false);
  for (std::size_t r = 0; r < fs.size(); ++r) raw[r] = !run.triggers[r].empty();
  const auto expanded = split_quality(reference, fs, run.initial_owner, &run.in_contested_cluster);
  const auto strict = split_quality(reference, fs, run.initial_owner, &raw);
  row.percent_contested_clusters = 100.0 * expanded.p_contested;
  row.clusters_found = run.clustering.clusters.size();
  if (m > 1 && expanded.split_recall) {
    row.percent_contested_features_found = 100.0 * *expanded.split_recall;
  }
  if (m > 1 && strict.p_split) row.p_split = *strict.p_split;
  row.cluster_transfers = run.ledger.count(TransferMessage::Kind::ClusterTransfer);
  const auto cmp = compare_clusterings(reference, run.clustering);
  row.pairwise_f1_vs_reference = cmp.pairwise_f1;
  row.equal_to_reference = cmp.exact_equal;
  return row;
}

SweepRow sweep_row_centralized(const Clustering& clustering, double seconds) {
  SweepRow row;
  row.agents = 1;
  row.compute_time_per_agent_s = seconds;
  row.post_qp_time_per_agent_s = seconds;
  row.clusters_found = clustering.clusters.size();
  return row;
}

std::string sweep_csv_header() {
  return "Number of Agents,Compute Time Per Agent (s),Post-QP Compute Time Per Agent (s),"
         "QP Time Per Agent (s),Percent Contested Clusters,Number of Clusters Found,"
         "% Contested Features Found,p_split (raw),Cluster Transfers,"
         "Pairwise F1 vs Centralized,Equal to Centralized\n";
}

std::string sweep_csv_line(const SweepRow& row) {
  std::string out = std::to_string(row.agents);
  out += "," + fmt(row.compute_time_per_agent_s, 6);
  out += "," + fmt(row.post_qp_time_per_agent_s, 6);
  out += "," + (row.qp_time_per_agent_s ? fmt(*row.qp_time_per_agent_s, 6) : std::string("NA"));
  out += "," + fmt(row.percent_contested_clusters, 2);
  out += "," + std::to_string(row.clusters_found);
  out += "," + (row.percent_contested_features_found ? fmt(*row.percent_contested_features_found, 2)
                                                      : std::string("NA"));
  out += "," + (row.p_split ? fmt(*row.p_split, 4) : std::string("NA"));
  out += "," + std::to_string(row.cluster_transfers);
  out += "," + (row.pairwise_f1_vs_reference ? fmt(*row.pairwise_f1_vs_reference, 6) : std::string("NA"));
  out += "," + (row.equal_to_reference ? std::string(*row.equal_to_reference ? "true" : "false")
                                       : std::string("NA"));
  return out + "\n";
}

nlohmann::json match_report(const FeatureSet& fs, const MatchParams& params,
                            const Clustering& clustering, double seconds) {
  std::size_t singletons = 0, largest = 0;
  for (const auto& c : clustering.clusters) {
    singletons += c.size() == 1;
    largest = std::max(largest, c.size());
  }
  return {{"command", "match"},
          {"config",
           {{"rho", params.rho},
            {"kernel", to_string(params.kernel)},
            {"features", fs.size()},
            {"images", fs.image_count()},
            {"dim", fs.dim()}}},
          {"timing", {{"total_s", seconds}}},
          {"metrics",
           {{"number_of_clusters_found", clustering.clusters.size()},
            {"singleton_clusters", singletons},
            {"largest_cluster", largest}}}};
}

nlohmann::json dmatch_report(const FeatureSet& fs, const DistributedParams& params,
                             const DistributedResult& run, const Clustering* reference) {
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : run.agents) agents.push_back(agent_json(a));
  const auto check = check_ledger(run.ledger, fs.size());
  nlohmann::json report = {
      {"command", "dmatch"},
      {"config",
       {{"agents", params.agents},
        {"rho", params.match.rho},
        {"kernel", to_string(params.match.kernel)},
        {"seeding", to_string(params.seeding)},
        {"seed", params.seed},
        {"threads", params.threads},
        {"contested_sigma",
         params.contested_sigma == ContestedSigma::PerFeature ? "per-feature" : "agent-max"},
        {"features", fs.size()},
        {"images", fs.image_count()},
        {"dim", fs.dim()}}},
      {"timing", {{"partition_s", run.partition_s}}},
      {"agents", std::move(agents)},
      {"ledger",
       {{"summary", run.ledger.to_json()["summary"]},
        {"hash", run.ledger.hash()},
        {"checks_passed", check.ok()},
        {"violations", check.violations}}},
      {"metrics", {{"number_of_clusters_found", run.clustering.clusters.size()}}}};
  if (reference) {
    report["sweep_row"] = sweep_row(fs, run, *reference).to_json();
    report["metrics"]["equivalent_to_centralized"] =
        compare_clusterings(*reference, run.clustering).exact_equal;
  }
  return report;
}

std::uint64_t report_digest(const nlohmann::json& report) {
  nlohmann::json copy = report;
  strip_timing(copy);
  return fnv1a64(copy.dump());
}

std::vector<double> quickmatch_detection_counts(const DetectionData& data,
                                                const Clustering& clustering) {
  std::map<std::int64_t, std::size_t> query_slot;
  for (std::size_t q = 0; q < data.query_images.size(); ++q) query_slot[data.query_images[q]] = q;
  std::vector<double> counts(data.query_images.size(), 0.0);
  for (const Cluster& c : clustering.clusters) {
    const bool has_reference = std::any_of(c.begin(), c.end(), [&](const FeatureId& id) {
      return id.image == data.reference_image;
    });
    if (!has_reference) continue;
    for (const FeatureId& id : c) {
      const auto it = query_slot.find(id.image);
      if (it != query_slot.end()) counts[it->second] += 1.0;
    }
  }
  return counts;
}

std::vector<double> baseline_detection_counts(const DetectionData& data,
                                              const RatioTestOptions& opts) {
  const FeatureSet& fs = data.features;
  auto rows_of = [&](std::int64_t image) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < fs.size(); ++r) {
      if (fs.id(r).image == image) rows.push_back(r);
    }
    return rows;
  };
  const FeatureSet train = fs.subset(rows_of(data.reference_image));
  std::vector<double> counts;
  for (std::int64_t image : data.query_images) {
    const FeatureSet query = fs.subset(rows_of(image));
    counts.push_back(static_cast<double>(baseline_ratio_match(query, train, opts).size()));
  }
  return counts;
}

}  // namespace qm
