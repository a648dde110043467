#include "distributed/distributed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "core/error.hpp"

namespace qm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index touches
// only its own state, so the schedule cannot change results.
template <typename Fn>
void for_each_agent(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  const std::size_t count = std::min(threads, n);
  for (std::size_t w = 0; w < count; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += count) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Largest parent-edge length; the largest sigma_i when the tree has no edges.
double agent_sigma(const MatchResult& model) {
  double out = 0.0;
  bool any_edge = false;
  for (std::size_t r = 0; r < model.tree.parent.size(); ++r) {
    if (!model.tree.is_root(r)) {
      out = std::max(out, model.tree.edge_length[r]);
      any_edge = true;
    }
  }
  if (!any_edge) {
    for (double s : model.distinctiveness.sigma) out = std::max(out, s);
  }
  return out;
}

// Local QuickMatch. An agent holding part of the set may see fewer than two
// features of an image; the merge threshold then uses sigma_a for that image
// instead of an unrelated local distance. With the full set (one agent) this
// is exactly the centralized run.
MatchResult agent_quickmatch(const FeatureSet& local, const MatchParams& params, bool partial) {
  MatchResult model = run_quickmatch(local, params);
  if (!partial || local.empty()) return model;
  std::vector<std::size_t> per_image(local.image_count(), 0);
  for (std::size_t r = 0; r < local.size(); ++r) ++per_image[local.image(r)];
  Distinctiveness merge = model.distinctiveness;
  const double sigma_a = std::max(agent_sigma(model), kSigmaFloor);
  bool changed = false;
  for (std::size_t i = 0; i < per_image.size(); ++i) {
    if (per_image[i] < 2) {
      merge.sigma[i] = sigma_a;
      changed = true;
    }
  }
  if (!changed) return model;
  nlohmann::json provenance = model.clustering.provenance;
  model.rows = break_and_merge_rows(local, model.tree, merge, params.rho);
  model.clustering = to_clustering(local, model.rows);
  model.clustering.provenance = std::move(provenance);
  return model;
}

std::vector<std::size_t> cluster_index(const RowClusters& rows, std::size_t n) {
  std::vector<std::size_t> out(n, SIZE_MAX);
  for (std::size_t c = 0; c < rows.size(); ++c) {
    for (std::size_t r : rows[c]) out[r] = c;
  }
  return out;
}

// Local clusters in ascending order of their smallest feature id.
std::vector<std::size_t> cluster_order(const AgentState& agent) {
  const auto& rows = agent.model.rows;
  std::vector<FeatureId> key(rows.size());
  for (std::size_t c = 0; c < rows.size(); ++c) {
    key[c] = agent.local.id(rows[c].front());
    for (std::size_t r : rows[c]) key[c] = std::min(key[c], agent.local.id(r));
  }
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  return order;
}

TransferMessage cluster_message(const Packet& p, std::size_t from, std::size_t to, Phase phase) {
  TransferMessage msg;
  msg.kind = TransferMessage::Kind::ClusterTransfer;
  msg.phase = phase;
  msg.round = phase == Phase::Transfer ? 2 : 3;
  msg.from = from;
  msg.to = to;
  msg.packet = p.id;
  msg.features = p.features.ids();
  msg.vectors = p.features.values();
  return msg;
}

}  // namespace

std::string to_string(Seeding s) { return s == Seeding::KMeans ? "kmeans" : "random"; }

Seeding seeding_from_string(const std::string& name) {
  if (name == "kmeans") return Seeding::KMeans;
  if (name == "random") return Seeding::Random;
  throw InputError("unknown seeding `" + name + "`");
}

void DistributedParams::check() const {
  if (agents == 0) throw InputError("agent count must be at least 1");
  match.check();
}

std::size_t AgentState::min_trigger(std::size_t cluster) const {
  std::size_t out = SIZE_MAX;
  for (std::size_t r : model.rows[cluster]) {
    if (!triggers[r].empty()) out = std::min(out, triggers[r].front());
  }
  return out;
}

std::vector<AgentState> route_features(const FeatureSet& fs, const Partition& part,
                                       NetworkLedger& ledger) {
  const std::size_t m = part.agents();
  if (part.assignment().size() != fs.size()) {
    throw InputError("partition was built on a different feature set");
  }
  std::vector<AgentState> agents(m);
  for (std::size_t a = 0; a < m; ++a) agents[a].id = a;
  for (std::size_t r = 0; r < fs.size(); ++r) {
    const std::size_t owner = part.owner(r);
    agents[owner].global_rows.push_back(r);
    TransferMessage msg;
    msg.kind = TransferMessage::Kind::Route;
    msg.phase = Phase::Route;
    msg.round = 0;
    msg.from = fs.image(r) % m;
    msg.to = owner;
    msg.features = {fs.id(r)};
    ledger.append(std::move(msg));
  }
  for (auto& agent : agents) agent.local = fs.subset(agent.global_rows);
  return agents;
}

void local_cluster(AgentState& agent, const MatchParams& params, bool partial) {
  const auto start = Clock::now();
  agent.model = agent_quickmatch(agent.local, params, partial);
  const std::size_t n = agent.local.size();
  agent.cluster_of = cluster_index(agent.model.rows, n);
  agent.sigma_p.assign(n, 0.0);
  agent.sigma_a = n > 0 ? agent_sigma(agent.model) : 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (!agent.model.tree.is_root(r)) agent.sigma_p[r] = agent.model.tree.edge_length[r];
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (agent.model.tree.is_root(r)) agent.sigma_p[r] = agent.sigma_a;
  }
  agent.triggers.assign(n, {});
  agent.departed.assign(agent.model.rows.size(), false);
  agent.timings.cluster_s = seconds_since(start);
}

void compute_boundary_distances(AgentState& agent, const Partition& part) {
  const auto start = Clock::now();
  const std::size_t m = part.agents();
  agent.boundary.assign(agent.local.size(), std::vector<double>(m, kInf));
  for (std::size_t r = 0; r < agent.local.size(); ++r) {
    for (std::size_t e = 0; e < m; ++e) {
      if (e == agent.id) continue;
      agent.boundary[r][e] = bisector_distance(agent.local.vector(r), part, agent.id, e);
    }
  }
  agent.timings.boundary_s = seconds_since(start);
}

ScalarTable exchange_boundary_scalars(const std::vector<AgentState>& agents,
                                      NetworkLedger& ledger) {
  const std::size_t m = agents.size();
  ScalarTable d(m, std::vector<double>(m, kInf));
  for (std::size_t sender = 0; sender < m; ++sender) {
    const AgentState& s = agents[sender];
    for (std::size_t region = 0; region < m; ++region) {
      if (region == sender) continue;
      double best = kInf;
      for (const auto& row : s.boundary) best = std::min(best, row[region]);
      d[region][sender] = best;
      TransferMessage msg;
      msg.kind = TransferMessage::Kind::BoundaryScalar;
      msg.phase = Phase::Scalars;
      msg.round = 1;
      msg.from = sender;
      msg.to = region;
      msg.scalar = best;
      ledger.append(std::move(msg));
    }
  }
  return d;
}

void detect_contested(AgentState& agent, const ScalarTable& scalars, ContestedSigma mode) {
  const std::size_t m = scalars.size();
  agent.triggers.assign(agent.local.size(), {});
  for (std::size_t r = 0; r < agent.local.size(); ++r) {
    const double sigma = mode == ContestedSigma::AgentMax ? agent.sigma_a : agent.sigma_p[r];
    for (std::size_t other = 0; other < m; ++other) {
      if (other == agent.id) continue;
      if (agent.boundary[r][other] + scalars[agent.id][other] < sigma) {
        agent.triggers[r].push_back(other);
      }
    }
  }
}

void transfer_round(std::vector<AgentState>& agents, NetworkLedger& ledger) {
  const std::size_t m = agents.size();
  std::vector<std::vector<Packet>> inbox(m);
  std::size_t next_packet = 0;

  auto ship_cluster = [&](AgentState& agent, std::size_t cluster, std::size_t to, Phase phase) {
    std::vector<std::size_t> rows = agent.model.rows[cluster];
    std::sort(rows.begin(), rows.end(),
              [&](std::size_t a, std::size_t b) { return agent.local.id(a) < agent.local.id(b); });
    Packet p{next_packet++, agent.id, agent.local.subset(rows)};
    agent.departed[cluster] = true;
    ledger.append(cluster_message(p, agent.id, to, phase));
    inbox[to].push_back(std::move(p));
  };

  // Send: every cluster with a contested member goes to its lowest triggering agent when
  // that agent has a lower index.
  for (auto& agent : agents) {
    for (std::size_t c : cluster_order(agent)) {
      const std::size_t target = agent.min_trigger(c);
      if (target < agent.id) ship_cluster(agent, c, target, Phase::Transfer);
    }
  }

  // Receive, highest index first. Forwarded packets land in lower inboxes
  // that have not been processed yet.
  for (std::size_t step = 0; step < m; ++step) {
    AgentState& agent = agents[m - 1 - step];
    std::vector<Packet> queue = std::move(inbox[agent.id]);
    inbox[agent.id].clear();
    agent.packets_received += queue.size();
    for (Packet& p : queue) {
      // Nearest round-0 feature of this agent to any member of the packet.
      std::optional<std::size_t> nearest;
      double nearest_d = kInf;
      for (std::size_t r = 0; r < agent.local.size(); ++r) {
        for (std::size_t q = 0; q < p.features.size(); ++q) {
          const double d = distance_unchecked(agent.local.data(r), p.features.data(q),
                                              agent.local.dim());
          if (!nearest || d < nearest_d ||
              (d == nearest_d && agent.local.id(r) < agent.local.id(*nearest))) {
            nearest = r;
            nearest_d = d;
          }
        }
      }
      std::size_t target = SIZE_MAX;
      if (nearest && agent.contested(*nearest)) {
        target = agent.min_trigger(agent.cluster_of[*nearest]);
      }
      if (target < agent.id) {
        const std::size_t home = agent.cluster_of[*nearest];
        ledger.append(cluster_message(p, agent.id, target, Phase::Forward));
        inbox[target].push_back(std::move(p));
        if (!agent.departed[home]) ship_cluster(agent, home, target, Phase::Forward);
      } else {
        agent.accepted.push_back(std::move(p));
      }
    }
  }
}

Clustering finalize(std::vector<AgentState>& agents, const FeatureSet& fs,
                    const DistributedParams& params) {
  for (auto& agent : agents) {
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < agent.local.size(); ++r) {
      if (!agent.departed[agent.cluster_of[r]]) keep.push_back(r);
    }
    FeatureSet kept = agent.local.subset(keep);
    std::vector<FeatureId> ids = kept.ids();
    std::vector<double> values = kept.values();
    for (const Packet& p : agent.accepted) {
      ids.insert(ids.end(), p.features.ids().begin(), p.features.ids().end());
      values.insert(values.end(), p.features.values().begin(), p.features.values().end());
    }
    agent.final_set = ids.empty() ? agent.local.subset({}) : FeatureSet(fs.dim(), ids, values);
  }

  // Re-clustering needs no communication.
  for_each_agent(agents.size(), params.threads, [&](std::size_t a) {
    const auto start = Clock::now();
    agents[a].final_model = agent_quickmatch(agents[a].final_set, params.match, agents.size() > 1);
    agents[a].timings.finalize_s = seconds_since(start);
  });

  std::vector<std::size_t> owners(fs.size(), 0);
  Clustering out;
  for (const auto& agent : agents) {
    for (const FeatureId& id : agent.final_set.ids()) {
      const auto row = fs.find(id);
      if (!row) throw InvariantError("agent " + std::to_string(agent.id) + " holds unknown feature " + to_string(id));
      ++owners[*row];
    }
    for (const Cluster& c : agent.final_model.clustering.clusters) out.clusters.push_back(c);
  }
  for (std::size_t r = 0; r < fs.size(); ++r) {
    if (owners[r] != 1) {
      throw InvariantError("feature " + to_string(fs.id(r)) + " is owned by " +
                           std::to_string(owners[r]) + " agents after transfers");
    }
  }
  out.canonicalize();
  try {
    validate(out, fs);
  } catch (const ValidationError& e) {
    throw InvariantError(std::string("distributed output invalid: ") + e.what());
  }
  return out;
}

Partition make_partition(const FeatureSet& fs, const DistributedParams& params) {
  params.check();
  return params.seeding == Seeding::KMeans ? kmeans_seeds(fs, params.agents, params.seed)
                                           : random_seeds(fs, params.agents, params.seed);
}

DistributedResult run_distributed(const FeatureSet& fs, const Partition& part,
                                  const DistributedParams& params) {
  params.check();
  if (fs.empty()) throw InputError("no features");
  const std::size_t m = part.agents();
  DistributedResult out;
  out.partition = part;
  out.ledger = NetworkLedger(m);

  auto agents = route_features(fs, part, out.ledger);

  for_each_agent(m, params.threads, [&](std::size_t a) {
    local_cluster(agents[a], params.match, m > 1);
    compute_boundary_distances(agents[a], part);
  });

  const ScalarTable scalars = exchange_boundary_scalars(agents, out.ledger);

  for_each_agent(m, params.threads, [&](std::size_t a) {
    detect_contested(agents[a], scalars, params.contested_sigma);
  });

  transfer_round(agents, out.ledger);

  const std::size_t before_finalize = out.ledger.messages().size();
  out.clustering = finalize(agents, fs, params);
  if (out.ledger.messages().size() != before_finalize) {
    throw InvariantError("messages sent during finalize");
  }
  out.clustering.provenance = {{"algorithm", "distributed-quickmatch"},
                               {"rho", params.match.rho},
                               {"kernel", to_string(params.match.kernel)},
                               {"agents", m},
                               {"seeding", part.method()},
                               {"seed", params.seed}};

  out.initial_owner = part.assignment();
  out.final_owner.assign(fs.size(), 0);
  out.triggers.assign(fs.size(), {});
  out.in_contested_cluster.assign(fs.size(), false);
  for (const auto& agent : agents) {
    AgentStats s;
    s.id = agent.id;
    s.features_initial = agent.local.size();
    s.features_final = agent.final_set.size();
    s.local_clusters = agent.model.rows.size();
    s.sigma_a = agent.sigma_a;
    s.timings = agent.timings;
    s.clusters_received = agent.packets_received;
    s.clusters_accepted = agent.accepted.size();
    s.final_clusters = agent.final_model.clustering.clusters.size();
    for (std::size_t c = 0; c < agent.model.rows.size(); ++c) {
      s.clusters_sent += agent.departed[c];
      if (agent.min_trigger(c) != SIZE_MAX) {
        ++s.contested_clusters;
        for (std::size_t r : agent.model.rows[c]) {
          out.in_contested_cluster[agent.global_rows[r]] = true;
        }
      }
    }
    for (std::size_t r = 0; r < agent.local.size(); ++r) {
      s.contested_features += agent.contested(r);
      out.triggers[agent.global_rows[r]] = agent.triggers[r];
    }
    for (const FeatureId& id : agent.final_set.ids()) out.final_owner[*fs.find(id)] = agent.id;
    out.agents.push_back(s);
  }
  return out;
}

DistributedResult distributed_quickmatch(const FeatureSet& fs, const DistributedParams& params) {
  params.check();
  const auto start = Clock::now();
  Partition part = make_partition(fs, params);
  const double partition_s = seconds_since(start);
  DistributedResult out = run_distributed(fs, part, params);
  out.partition_s = partition_s;
  return out;
}

}  // namespace qm
