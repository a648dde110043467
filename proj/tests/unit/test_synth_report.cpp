#include <algorithm>
#include <set>

#include "doctest.h"
#include "core/error.hpp"
#include "report/report.hpp"
#include "synth/synth.hpp"

using namespace qm;

TEST_CASE("generate_blobs: defaults") {
  const SynthData data = generate_blobs(SynthConfig{});
  CHECK(data.features.size() == 250);
  CHECK(data.features.image_count() == 10);
  CHECK(data.features.dim() == 2);
  CHECK(data.truth.clusters.size() == 25);
  CHECK_NOTHROW(validate(data.truth, data.features));
  for (const auto& c : data.truth.clusters) {
    CHECK(c.size() == 10);
    std::set<std::int64_t> images;
    for (const auto& id : c) images.insert(id.image);
    CHECK(images.size() == 10);
  }
  // Grid centers in [0, 10]^2.
  REQUIRE(data.centers.size() == 25);
  for (const auto& c : data.centers) {
    CHECK(c[0] >= 0.0);
    CHECK(c[0] <= 10.0);
    CHECK(c[1] >= 0.0);
    CHECK(c[1] <= 10.0);
  }
}

TEST_CASE("generate_blobs: per_cluster = 1, higher dim, determinism, errors") {
  SynthConfig one;
  one.per_cluster = 1;
  const SynthData d1 = generate_blobs(one);
  CHECK(d1.truth.clusters.size() == 25);
  for (const auto& c : d1.truth.clusters) CHECK(c.size() == 1);

  SynthConfig wide;
  wide.dim = 5;
  wide.n_clusters = 7;
  const SynthData d5 = generate_blobs(wide);
  CHECK(d5.features.dim() == 5);
  CHECK(d5.truth.clusters.size() == 7);

  CHECK(format_features(generate_blobs(SynthConfig{}).features) ==
        format_features(generate_blobs(SynthConfig{}).features));
  SynthConfig other;
  other.seed = 2;
  CHECK(format_features(generate_blobs(other).features) !=
        format_features(generate_blobs(SynthConfig{}).features));

  SynthConfig bad;
  bad.spread = 0.0;
  CHECK_THROWS_AS(generate_blobs(bad), InputError);
  bad.spread = -1.0;
  CHECK_THROWS_AS(generate_blobs(bad), InputError);
  SynthConfig none;
  none.n_clusters = 0;
  CHECK_THROWS_AS(generate_blobs(none), InputError);
}

TEST_CASE("generate_detection: shape") {
  DetectionConfig cfg;
  cfg.dim = 8;
  const DetectionData d = generate_detection(cfg);
  CHECK(d.query_images.size() == cfg.positive_images + cfg.negative_images);
  CHECK(d.contains_object.size() == d.query_images.size());
  CHECK(std::count(d.contains_object.begin(), d.contains_object.end(), true) ==
        static_cast<long>(cfg.positive_images));
  CHECK(d.features.dim() == 8);
  std::size_t in_reference = 0;
  for (std::size_t r = 0; r < d.features.size(); ++r) in_reference += d.features.id(r).image == d.reference_image;
  CHECK(in_reference == cfg.object_points + cfg.reference_background);
  CHECK(format_features(generate_detection(cfg).features) == format_features(d.features));
}

TEST_CASE("reports: digest ignores timing, table row layout") {
  const SynthData data = generate_blobs(SynthConfig{});
  const Clustering c = quickmatch(data.features, {});
  const auto a = match_report(data.features, {}, c, 0.5);
  const auto b = match_report(data.features, {}, c, 1.5);
  CHECK(a.dump() != b.dump());
  CHECK(report_digest(a) == report_digest(b));
  CHECK(a["metrics"]["number_of_clusters_found"] == 25);

  DistributedParams p;
  const DistributedResult r1 = distributed_quickmatch(data.features, p);
  const DistributedResult r2 = distributed_quickmatch(data.features, p);
  const Clustering ref = quickmatch(data.features, p.match);
  const auto j1 = dmatch_report(data.features, p, r1, &ref);
  const auto j2 = dmatch_report(data.features, p, r2, &ref);
  CHECK(report_digest(j1) == report_digest(j2));
  CHECK(j1["ledger"]["checks_passed"] == true);
  CHECK(j1["metrics"]["equivalent_to_centralized"] == true);

  const SweepRow row = sweep_row(data.features, r1, ref);
  CHECK(row.agents == 4);
  CHECK(row.clusters_found == 25);
  CHECK(row.qp_time_per_agent_s.has_value());
  CHECK(*row.equal_to_reference);
  const std::string header = sweep_csv_header();
  const std::string line = sweep_csv_line(row);
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(line.begin(), line.end(), ','));
  CHECK(line.rfind("4,", 0) == 0);

  const SweepRow central = sweep_row_centralized(ref, 0.1);
  CHECK(!central.qp_time_per_agent_s);
  CHECK(sweep_csv_line(central).find("NA") != std::string::npos);
}

TEST_CASE("detection counts: reference clusters count matching query features") {
  DetectionData d;
  d.features = parse_features("0 0 0\n0 1 5\n1 0 0.1\n2 0 5.1\n2 1 9\n");
  d.reference_image = 0;
  d.query_images = {1, 2};
  d.contains_object = {true, true};
  Clustering c;
  c.clusters = {{{0, 0}, {1, 0}}, {{0, 1}, {2, 0}}, {{2, 1}}};
  CHECK(quickmatch_detection_counts(d, c) == std::vector<double>{1.0, 1.0});
  const auto base = baseline_detection_counts(d);
  CHECK(base == std::vector<double>{1.0, 2.0});
}
