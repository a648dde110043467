#include "distributed/ledger.hpp"

#include <map>

#include "core/error.hpp"

namespace qm {

std::string to_string(Phase p) {
  switch (p) {
    case Phase::Route: return "route";
    case Phase::Scalars: return "scalars";
    case Phase::Transfer: return "transfer";
    case Phase::Forward: return "forward";
    case Phase::Finalize: return "finalize";
  }
  return "unknown";
}

namespace {

const char* kind_name(TransferMessage::Kind k) {
  switch (k) {
    case TransferMessage::Kind::Route: return "route";
    case TransferMessage::Kind::BoundaryScalar: return "scalar";
    case TransferMessage::Kind::ClusterTransfer: return "cluster";
  }
  return "unknown";
}

}  // namespace

void NetworkLedger::append(TransferMessage msg) {
  if (msg.from >= agents_ || msg.to >= agents_) {
    throw InvariantError("ledger: message endpoint outside agent range");
  }
  messages_.push_back(std::move(msg));
}

std::size_t NetworkLedger::count(TransferMessage::Kind kind) const {
  std::size_t n = 0;
  for (const auto& m : messages_) n += m.kind == kind;
  return n;
}

std::size_t NetworkLedger::count(Phase phase) const {
  std::size_t n = 0;
  for (const auto& m : messages_) n += m.phase == phase;
  return n;
}

std::size_t NetworkLedger::cross_agent_routes() const {
  std::size_t n = 0;
  for (const auto& m : messages_) {
    n += m.kind == TransferMessage::Kind::Route && m.from != m.to;
  }
  return n;
}

std::size_t NetworkLedger::transferred_features() const {
  std::size_t n = 0;
  for (const auto& m : messages_) {
    if (m.kind == TransferMessage::Kind::ClusterTransfer) n += m.features.size();
  }
  return n;
}

std::vector<std::vector<std::size_t>> NetworkLedger::message_matrix() const {
  std::vector<std::vector<std::size_t>> out(agents_, std::vector<std::size_t>(agents_, 0));
  for (const auto& m : messages_) ++out[m.from][m.to];
  return out;
}

std::vector<std::vector<std::size_t>> NetworkLedger::feature_matrix() const {
  std::vector<std::vector<std::size_t>> out(agents_, std::vector<std::size_t>(agents_, 0));
  for (const auto& m : messages_) out[m.from][m.to] += m.features.size();
  return out;
}

std::vector<TransferChain> NetworkLedger::chains() const {
  std::map<std::size_t, TransferChain> by_packet;
  for (const auto& m : messages_) {
    if (m.kind != TransferMessage::Kind::ClusterTransfer) continue;
    auto [it, fresh] = by_packet.try_emplace(m.packet);
    TransferChain& chain = it->second;
    if (fresh) {
      chain.packet = m.packet;
      chain.features = m.features;
      chain.hops.push_back(m.from);
    }
    chain.hops.push_back(m.to);
  }
  std::vector<TransferChain> out;
  for (auto& [id, chain] : by_packet) out.push_back(std::move(chain));
  return out;
}

nlohmann::json NetworkLedger::to_json(bool include_vectors) const {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages_) {
    nlohmann::json j;
    j["kind"] = kind_name(m.kind);
    j["phase"] = to_string(m.phase);
    j["round"] = m.round;
    j["from"] = m.from;
    j["to"] = m.to;
    switch (m.kind) {
      case TransferMessage::Kind::Route:
        j["feature"] = {m.features.at(0).image, m.features.at(0).index};
        break;
      case TransferMessage::Kind::BoundaryScalar:
        // Infinity is not representable in JSON.
        if (std::isfinite(m.scalar)) j["value"] = m.scalar; else j["value"] = "inf";
        break;
      case TransferMessage::Kind::ClusterTransfer: {
        j["packet"] = m.packet;
        nlohmann::json ids = nlohmann::json::array();
        for (const auto& id : m.features) ids.push_back({id.image, id.index});
        j["features"] = std::move(ids);
        if (include_vectors) j["vectors"] = m.vectors;
        break;
      }
    }
    msgs.push_back(std::move(j));
  }
  nlohmann::json chains = nlohmann::json::array();
  for (const auto& c : this->chains()) {
    chains.push_back({{"packet", c.packet}, {"size", c.features.size()}, {"hops", c.hops}});
  }
  return {{"agents", agents_},
          {"messages", std::move(msgs)},
          {"chains", std::move(chains)},
          {"summary",
           {{"routes", count(TransferMessage::Kind::Route)},
            {"cross_agent_routes", cross_agent_routes()},
            {"scalars", count(TransferMessage::Kind::BoundaryScalar)},
            {"cluster_transfers", count(TransferMessage::Kind::ClusterTransfer)},
            {"transferred_features", transferred_features()},
            {"finalize_messages", count(Phase::Finalize)}}}};
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t NetworkLedger::hash() const { return fnv1a64(to_json(true).dump()); }

LedgerCheck check_ledger(const NetworkLedger& ledger, std::size_t feature_count) {
  LedgerCheck out;
  const std::size_t m = ledger.agents();
  const std::size_t routes = ledger.count(TransferMessage::Kind::Route);
  if (routes != feature_count) {
    out.violations.push_back("route count " + std::to_string(routes) + " != feature count " +
                             std::to_string(feature_count));
  }
  const std::size_t scalars = ledger.count(TransferMessage::Kind::BoundaryScalar);
  if (scalars != m * (m - 1)) {
    out.violations.push_back("scalar count " + std::to_string(scalars) + " != m(m-1) = " +
                             std::to_string(m * (m - 1)));
  }
  if (const std::size_t n = ledger.count(Phase::Finalize); n != 0) {
    out.violations.push_back(std::to_string(n) + " messages during finalize");
  }
  for (const auto& msg : ledger.messages()) {
    if (msg.kind == TransferMessage::Kind::ClusterTransfer && msg.to >= msg.from) {
      out.violations.push_back("packet " + std::to_string(msg.packet) + " moved from agent " +
                               std::to_string(msg.from) + " to " + std::to_string(msg.to));
    }
  }
  for (const auto& chain : ledger.chains()) {
    for (std::size_t h = 1; h < chain.hops.size(); ++h) {
      if (chain.hops[h] >= chain.hops[h - 1]) {
        out.violations.push_back("packet " + std::to_string(chain.packet) +
                                 " chain is not strictly decreasing");
        break;
      }
    }
    if (m > 0 && chain.hops.size() - 1 > m - 1) {
      out.violations.push_back("packet " + std::to_string(chain.packet) + " made " +
                               std::to_string(chain.hops.size() - 1) + " hops");
    }
  }
  return out;
}

}  // namespace qm
