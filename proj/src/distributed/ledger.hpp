#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "core/feature_set.hpp"
#include "json.hpp"

namespace qm {

enum class Phase {
  Route,     // round 0: feature sent to the agent owning its region
  Scalars,   // round 1: d_aa' boundary scalars
  Transfer,  // round 2: contested clusters sent to a lower agent
  Forward,   // round 3: received clusters forwarded during the receive pass
  Finalize,  // local re-clustering, expected to be silent
};

std::string to_string(Phase p);

struct TransferMessage {
  enum class Kind { Route, BoundaryScalar, ClusterTransfer };

  Kind kind = Kind::Route;
  Phase phase = Phase::Route;
  std::size_t round = 0;
  std::size_t from = 0;
  std::size_t to = 0;
  double scalar = 0.0;              // BoundaryScalar
  std::vector<FeatureId> features;  // Route (one id) and ClusterTransfer
  std::vector<double> vectors;      // ClusterTransfer payload, row-major
  std::size_t packet = 0;           // ClusterTransfer: packet id
};

// Per-packet hop list: origin agent followed by every destination.
struct TransferChain {
  std::size_t packet = 0;
  std::vector<FeatureId> features;
  std::vector<std::size_t> hops;
};

// Append-only log of every message on the simulated network.
class NetworkLedger {
 public:
  explicit NetworkLedger(std::size_t agents = 0) : agents_(agents) {}

  void append(TransferMessage msg);

  std::size_t agents() const { return agents_; }
  const std::vector<TransferMessage>& messages() const { return messages_; }

  std::size_t count(TransferMessage::Kind kind) const;
  std::size_t count(Phase phase) const;
  // Route messages whose origin differs from the destination.
  std::size_t cross_agent_routes() const;
  std::size_t transferred_features() const;

  // Pair tallies [from][to] of messages and carried features.
  std::vector<std::vector<std::size_t>> message_matrix() const;
  std::vector<std::vector<std::size_t>> feature_matrix() const;

  std::vector<TransferChain> chains() const;

  nlohmann::json to_json(bool include_vectors = false) const;
  // FNV-1a over the canonical JSON text (vectors included).
  std::uint64_t hash() const;

 private:
  std::size_t agents_;
  std::vector<TransferMessage> messages_;
};

struct LedgerCheck {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Protocol checks: one route per feature, m(m-1) scalars, every cluster
// transfer moves to a strictly lower agent with chains of at most m-1 hops,
// and nothing is sent during finalize.
LedgerCheck check_ledger(const NetworkLedger& ledger, std::size_t feature_count);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace qm
