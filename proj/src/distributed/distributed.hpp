#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "core/clustering.hpp"
#include "core/feature_set.hpp"
#include "distributed/ledger.hpp"
#include "match/quickmatch.hpp"
#include "partition/partition.hpp"

namespace qm {

enum class Seeding { KMeans, Random };

std::string to_string(Seeding s);
Seeding seeding_from_string(const std::string& name);

// Which parent-edge length enters the contested test.
enum class ContestedSigma {
  PerFeature,  // the feature's own parent edge; the agent maximum for the root
  AgentMax,    // the agent maximum for every feature (more conservative)
};

struct DistributedParams {
  std::size_t agents = 4;
  MatchParams match{1.1, Kernel::Quadratic};
  Seeding seeding = Seeding::KMeans;
  std::uint64_t seed = 1;
  // Worker threads for per-agent phases; results do not depend on it.
  std::size_t threads = 1;
  ContestedSigma contested_sigma = ContestedSigma::PerFeature;

  void check() const;
};

// A cluster in flight. Carries vectors: agents share no memory.
struct Packet {
  std::size_t id = 0;
  std::size_t origin = 0;
  FeatureSet features;
};

struct AgentTimings {
  double cluster_s = 0.0;   // density, tree, break-and-merge
  double boundary_s = 0.0;  // boundary distances (the per-feature QPs)
  double finalize_s = 0.0;
};

struct AgentState {
  std::size_t id = 0;
  FeatureSet local;                      // features routed here in round 0
  std::vector<std::size_t> global_rows;  // row of each local feature in the full set

  MatchResult model;                      // local clustering of `local`
  std::vector<std::size_t> cluster_of;    // local row -> index into model.rows
  std::vector<double> sigma_p;            // parent-edge length per local row
  double sigma_a = 0.0;                   // max parent-edge length in the agent

  // boundary[row][e]: distance from the row to the bisector with agent e
  // (+inf for e == id).
  std::vector<std::vector<double>> boundary;
  // Agents each local row is contested with, ascending. Empty: not contested.
  std::vector<std::vector<std::size_t>> triggers;

  std::vector<bool> departed;      // per local cluster
  std::vector<Packet> accepted;    // packets that stay here after the receive pass
  std::size_t packets_received = 0;

  FeatureSet final_set;
  MatchResult final_model;

  AgentTimings timings;

  bool contested(std::size_t row) const { return !triggers[row].empty(); }
  // Lowest triggering agent over a local cluster's members, or SIZE_MAX.
  std::size_t min_trigger(std::size_t cluster) const;
};

// One agent per region, holding its features. Logs one Route message per
// feature from the agent hosting its image (image index mod m) to the owner.
std::vector<AgentState> route_features(const FeatureSet& fs, const Partition& part,
                                       NetworkLedger& ledger);

// Local QuickMatch with per-agent distinctiveness, then sigma_p and sigma_a.
// `partial`: the agent holds a strict subset of the features (m > 1); images
// with fewer than two local features then merge under sigma_a.
void local_cluster(AgentState& agent, const MatchParams& params, bool partial = true);

// Bisector distance from every local feature to every other region.
void compute_boundary_distances(AgentState& agent, const Partition& part);

// d[a][b]: smallest distance from a feature of agent b to the boundary of
// region a; +inf when b holds no features. Logs m(m-1) scalar messages, each
// from b to a.
using ScalarTable = std::vector<std::vector<double>>;
ScalarTable exchange_boundary_scalars(const std::vector<AgentState>& agents,
                                      NetworkLedger& ledger);

// A feature x of agent a is contested with b when
//   boundary(x, b) + d[a][b] < sigma_p(x).
void detect_contested(AgentState& agent, const ScalarTable& scalars, ContestedSigma mode);

// Send pass then receive pass (highest agent first).
void transfer_round(std::vector<AgentState>& agents, NetworkLedger& ledger);

// Local re-clustering on each agent's final holdings. Throws InvariantError
// if a feature ends up owned by zero or two agents.
Clustering finalize(std::vector<AgentState>& agents, const FeatureSet& fs,
                    const DistributedParams& params);

struct AgentStats {
  std::size_t id = 0;
  std::size_t features_initial = 0;
  std::size_t features_final = 0;
  std::size_t local_clusters = 0;
  std::size_t contested_features = 0;
  std::size_t contested_clusters = 0;
  std::size_t clusters_sent = 0;
  std::size_t clusters_received = 0;
  std::size_t clusters_accepted = 0;
  std::size_t final_clusters = 0;
  double sigma_a = 0.0;
  AgentTimings timings;
};

struct DistributedResult {
  Clustering clustering;
  NetworkLedger ledger;
  Partition partition;
  std::vector<AgentStats> agents;
  // Per row of the input set.
  std::vector<std::size_t> initial_owner;
  std::vector<std::size_t> final_owner;
  std::vector<std::vector<std::size_t>> triggers;  // contested-with agents, empty if not contested
  std::vector<bool> in_contested_cluster;          // member of a local cluster with a contested feature
  double partition_s = 0.0;
};

// Full protocol on a given partition.
DistributedResult run_distributed(const FeatureSet& fs, const Partition& part,
                                  const DistributedParams& params);

// Seeds the partition per params, then run_distributed.
DistributedResult distributed_quickmatch(const FeatureSet& fs, const DistributedParams& params);

Partition make_partition(const FeatureSet& fs, const DistributedParams& params);

}  // namespace qm
