#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "core/error.hpp"
#include "distributed/distributed.hpp"
#include "oracles.hpp"
#include "synth/synth.hpp"

using namespace qm;

namespace {

FeatureSet line_set(std::initializer_list<std::pair<std::int64_t, double>> pts) {
  std::vector<FeatureId> ids;
  std::vector<double> values;
  std::map<std::int64_t, std::int64_t> next;
  for (auto [image, x] : pts) {
    ids.push_back({image, next[image]++});
    values.push_back(x);
  }
  return FeatureSet(1, ids, values);
}

DistributedParams params_for(std::size_t m, std::size_t threads = 1) {
  DistributedParams p;
  p.agents = m;
  p.threads = threads;
  return p;
}

}  // namespace

TEST_CASE("route: one message per feature, sets disjoint and complete") {
  const SynthData data = generate_blobs(SynthConfig{});
  const Partition part = kmeans_seeds(data.features, 4, 1);
  NetworkLedger ledger(4);
  const auto agents = route_features(data.features, part, ledger);
  CHECK(ledger.count(Phase::Route) == 250);
  std::vector<int> seen(data.features.size(), 0);
  for (const auto& a : agents) {
    for (std::size_t k = 0; k < a.global_rows.size(); ++k) {
      ++seen[a.global_rows[k]];
      CHECK(part.owner(a.global_rows[k]) == a.id);
      CHECK(a.local.id(k) == data.features.id(a.global_rows[k]));
    }
  }
  for (int s : seen) CHECK(s == 1);

  NetworkLedger solo(1);
  route_features(data.features, kmeans_seeds(data.features, 1, 1), solo);
  CHECK(solo.cross_agent_routes() == 0);
}

TEST_CASE("local_cluster: single feature and whole blob") {
  const FeatureSet one = line_set({{0, 3.0}});
  AgentState a;
  a.local = one;
  local_cluster(a, {1.1, Kernel::Quadratic});
  CHECK(a.model.rows.size() == 1);
  CHECK(a.sigma_a > 0.0);
  CHECK(a.sigma_p[0] == a.sigma_a);

  SynthConfig cfg;
  cfg.n_clusters = 4;
  cfg.extent = 100.0;
  const SynthData data = generate_blobs(cfg);
  const Partition part(data.features, data.centers, "explicit");
  NetworkLedger ledger(4);
  auto agents = route_features(data.features, part, ledger);
  for (auto& ag : agents) {
    local_cluster(ag, {1.1, Kernel::Quadratic});
    CHECK(ag.model.rows.size() == 1);
    CHECK(ag.model.rows[0].size() == cfg.per_cluster);
    double mx = 0.0;
    for (double s : ag.sigma_p) mx = std::max(mx, s);
    CHECK(ag.sigma_a == mx);
  }
}

TEST_CASE("boundary scalars: d_01 = 3 example and oracle") {
  // Seeds 0 and 10, bisector at 5. Agent 1 holds one feature at 8.
  const FeatureSet fs = line_set({{0, 1.0}, {0, 2.0}, {1, 8.0}});
  const Partition part(fs, {{0.0}, {10.0}}, "explicit");
  NetworkLedger ledger(2);
  auto agents = route_features(fs, part, ledger);
  for (auto& a : agents) {
    local_cluster(a, {1.1, Kernel::Quadratic});
    compute_boundary_distances(a, part);
  }
  const ScalarTable d = exchange_boundary_scalars(agents, ledger);
  CHECK(d[0][1] == doctest::Approx(3.0));
  CHECK(d[1][0] == doctest::Approx(3.0));  // nearest of agent 0's features is at 2
  CHECK(ledger.count(Phase::Scalars) == 2);

  for (std::uint64_t trial = 1; trial <= 10; ++trial) {
    const FeatureSet rs = oracle::random_set(trial, 10, 8, 3);
    const std::size_t m = 2 + trial % 5;
    const Partition p = random_seeds(rs, m, trial);
    NetworkLedger l(m);
    auto ags = route_features(rs, p, l);
    for (auto& a : ags) {
      local_cluster(a, {1.1, Kernel::Quadratic});
      compute_boundary_distances(a, p);
    }
    const ScalarTable got = exchange_boundary_scalars(ags, l);
    const auto ref = oracle::scalars(rs, p.seeds());
    CHECK(l.count(Phase::Scalars) == m * (m - 1));
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) {
        if (a == b) continue;
        if (std::isinf(ref[a][b])) CHECK(std::isinf(got[a][b]));
        else CHECK(got[a][b] == doctest::Approx(ref[a][b]).epsilon(1e-9));
      }
  }
}

TEST_CASE("detect_contested: direct inequality") {
  AgentState a;
  a.id = 0;
  a.local = line_set({{0, 0.0}});
  a.sigma_p = {10.0};
  a.sigma_a = 10.0;
  a.boundary = {{std::numeric_limits<double>::infinity(), 1.0}};
  ScalarTable d{{std::numeric_limits<double>::infinity(), 2.0}, {0.0, std::numeric_limits<double>::infinity()}};
  detect_contested(a, d, ContestedSigma::PerFeature);
  CHECK(a.triggers[0] == std::vector<std::size_t>{1});

  // The sum reaches sigma_p, so nothing is contested.
  a.sigma_p = {3.0};
  detect_contested(a, d, ContestedSigma::PerFeature);
  CHECK(a.triggers[0].empty());
  // Agent-max mode uses sigma_a instead.
  detect_contested(a, d, ContestedSigma::AgentMax);
  CHECK(a.triggers[0] == std::vector<std::size_t>{1});
}

TEST_CASE("bisected blobs: every split cluster has contested features") {
  const SynthData data = generate_blobs(SynthConfig{});
  // Vertical line through x = 5 cuts the middle column of blobs.
  const Partition part(data.features, {{2.5, 5.0}, {7.5, 5.0}}, "explicit");
  const DistributedResult run = run_distributed(data.features, part, params_for(2));
  const Clustering central = quickmatch(data.features, {1.1, Kernel::Quadratic});
  const auto labels = labels_by_row(central, data.features);
  std::map<std::size_t, std::set<std::size_t>> owners;
  for (std::size_t r = 0; r < data.features.size(); ++r) owners[labels[r]].insert(part.owner(r));
  std::size_t split = 0;
  for (std::size_t r = 0; r < data.features.size(); ++r) {
    if (owners[labels[r]].size() > 1) {
      ++split;
      CHECK(run.in_contested_cluster[r]);
    }
  }
  CHECK(split > 0);
  CHECK(run.clustering.same_partition(central));
}

TEST_CASE("distributed: m = 1 equals centralized and sends nothing") {
  const SynthData data = generate_blobs(SynthConfig{});
  for (Kernel k : {Kernel::Quadratic, Kernel::Gaussian}) {
    DistributedParams p = params_for(1);
    p.match.kernel = k;
    const DistributedResult run = distributed_quickmatch(data.features, p);
    CHECK(to_json(Clustering{run.clustering.clusters, {}}) ==
          to_json(Clustering{quickmatch(data.features, {1.1, k}).clusters, {}}));
    CHECK(run.ledger.count(TransferMessage::Kind::ClusterTransfer) == 0);
    CHECK(run.ledger.count(Phase::Scalars) == 0);
    CHECK(run.ledger.cross_agent_routes() == 0);
  }
  // Random data, not just blobs.
  for (std::uint64_t t = 1; t <= 10; ++t) {
    const FeatureSet fs = oracle::random_set(t, 8, 8, 2);
    const DistributedResult run = distributed_quickmatch(fs, params_for(1));
    CHECK(run.clustering.same_partition(quickmatch(fs, {1.1, Kernel::Quadratic})));
  }
}

TEST_CASE("distributed: synthetic dataset m = 2..8 stays valid, m = 4 exact") {
  const SynthData data = generate_blobs(SynthConfig{});
  for (std::size_t m = 2; m <= 8; ++m) {
    const DistributedResult run = distributed_quickmatch(data.features, params_for(m));
    CHECK_NOTHROW(validate(run.clustering, data.features));
    const LedgerCheck check = check_ledger(run.ledger, data.features.size());
    CHECK_MESSAGE(check.ok(), m);
    for (const auto& chain : run.ledger.chains()) {
      CHECK(chain.hops.size() <= m);
      for (std::size_t h = 1; h < chain.hops.size(); ++h) CHECK(chain.hops[h] < chain.hops[h - 1]);
    }
    if (m == 4) CHECK(run.clustering.same_partition(data.truth));
  }
}

TEST_CASE("distributed: threads do not change anything") {
  const SynthData data = generate_blobs(SynthConfig{});
  for (std::size_t m : {3u, 4u, 8u}) {
    const DistributedResult a = distributed_quickmatch(data.features, params_for(m, 1));
    const DistributedResult b = distributed_quickmatch(data.features, params_for(m, 4));
    CHECK(a.ledger.hash() == b.ledger.hash());
    CHECK(to_json(a.clustering) == to_json(b.clustering));
    CHECK(a.triggers == b.triggers);
  }
}

TEST_CASE("distributed: no contested features means local clusterings pass through") {
  SynthConfig cfg;
  cfg.n_clusters = 4;
  cfg.extent = 1000.0;
  const SynthData data = generate_blobs(cfg);
  const Partition part(data.features, data.centers, "explicit");
  const DistributedResult run = run_distributed(data.features, part, params_for(4));
  for (const auto& t : run.triggers) CHECK(t.empty());
  CHECK(run.ledger.count(TransferMessage::Kind::ClusterTransfer) == 0);

  Clustering concat;
  NetworkLedger scratch(4);
  auto agents = route_features(data.features, part, scratch);
  for (auto& a : agents) {
    local_cluster(a, {1.1, Kernel::Quadratic});
    for (const auto& c : a.model.clustering.clusters) concat.clusters.push_back(c);
  }
  concat.canonicalize();
  CHECK(to_json(Clustering{run.clustering.clusters, {}}) == to_json(concat));
  for (std::size_t r = 0; r < run.final_owner.size(); ++r) CHECK(run.final_owner[r] == run.initial_owner[r]);
}

TEST_CASE("transfer: clusters move to the lowest triggering agent") {
  // Three agents on a line; a blob straddles the 1|2 bisector, so its pieces
  // go to agent 1 and nothing goes up.
  std::vector<std::pair<std::int64_t, double>> pts;
  for (std::int64_t i = 0; i < 6; ++i) {
    pts.push_back({i, 0.0 + 0.01 * static_cast<double>(i)});
    pts.push_back({i, 15.0 + 0.01 * static_cast<double>(i)});
    pts.push_back({i, 19.8 + 0.08 * static_cast<double>(i)});
  }
  std::vector<FeatureId> ids;
  std::vector<double> vals;
  std::map<std::int64_t, std::int64_t> next;
  for (auto [im, x] : pts) {
    ids.push_back({im, next[im]++});
    vals.push_back(x);
  }
  const FeatureSet fs(1, ids, vals);
  const Partition part(fs, {{0.0}, {15.0}, {25.0}}, "explicit");
  const DistributedResult run = run_distributed(fs, part, params_for(3));
  CHECK(check_ledger(run.ledger, fs.size()).ok());
  CHECK(run.ledger.count(TransferMessage::Kind::ClusterTransfer) > 0);
  for (const auto& msg : run.ledger.messages()) {
    if (msg.kind == TransferMessage::Kind::ClusterTransfer) CHECK(msg.to < msg.from);
  }
  CHECK(run.clustering.same_partition(quickmatch(fs, {1.1, Kernel::Quadratic})));
  for (std::size_t r = 0; r < fs.size(); ++r) CHECK(run.final_owner[r] <= run.initial_owner[r]);
}

TEST_CASE("ledger checks catch protocol violations") {
  NetworkLedger ledger(3);
  TransferMessage route;
  route.features = {{0, 0}};
  ledger.append(route);
  CHECK(!check_ledger(ledger, 2).ok());  // a feature was never routed

  NetworkLedger upward(2);
  upward.append(route);
  TransferMessage up;
  up.kind = TransferMessage::Kind::ClusterTransfer;
  up.phase = Phase::Transfer;
  up.round = 2;
  up.from = 0;
  up.to = 1;
  up.features = {{0, 0}};
  upward.append(up);
  CHECK(!check_ledger(upward, 1).ok());

  NetworkLedger late(1);
  late.append(route);
  TransferMessage fin;
  fin.kind = TransferMessage::Kind::BoundaryScalar;
  fin.phase = Phase::Finalize;
  late.append(fin);
  CHECK(!check_ledger(late, 1).ok());
}

TEST_CASE("ledger: JSON, hash and determinism") {
  const SynthData data = generate_blobs(SynthConfig{});
  const DistributedResult a = distributed_quickmatch(data.features, params_for(4));
  const DistributedResult b = distributed_quickmatch(data.features, params_for(4));
  CHECK(a.ledger.hash() == b.ledger.hash());
  CHECK(a.ledger.to_json(true).dump() == b.ledger.to_json(true).dump());
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("distributed: parameter errors") {
  const SynthData data = generate_blobs(SynthConfig{});
  CHECK_THROWS_AS(distributed_quickmatch(data.features, params_for(0)), InputError);
  CHECK_THROWS_AS(distributed_quickmatch(data.features, params_for(251)), InputError);
  CHECK_THROWS_AS(distributed_quickmatch(FeatureSet{}, params_for(1)), InputError);
  CHECK(seeding_from_string("random") == Seeding::Random);
  CHECK_THROWS_AS(seeding_from_string("grid"), InputError);
}
