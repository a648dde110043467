#include "core/clustering.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "core/error.hpp"

namespace qm {

std::size_t Clustering::feature_count() const {
  std::size_t n = 0;
  for (const Cluster& c : clusters) n += c.size();
  return n;
}

void Clustering::canonicalize() {
  for (Cluster& c : clusters) std::sort(c.begin(), c.end());
  std::sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
    if (a.empty() || b.empty()) return a.size() < b.size();
    return a.front() < b.front();
  });
}

Clustering Clustering::canonical() const {
  Clustering copy = *this;
  copy.canonicalize();
  return copy;
}

bool Clustering::same_partition(const Clustering& other) const {
  return canonical().clusters == other.canonical().clusters;
}

void validate_structure(const Clustering& c) {
  std::map<FeatureId, std::size_t> owner;
  for (std::size_t ci = 0; ci < c.clusters.size(); ++ci) {
    const Cluster& cluster = c.clusters[ci];
    if (cluster.empty()) throw ValidationError("cluster " + std::to_string(ci) + " is empty");
    std::set<std::int64_t> images;
    for (const FeatureId& id : cluster) {
      if (const auto [it, ok] = owner.emplace(id, ci); !ok) {
        throw ValidationError("feature " + to_string(id) + " appears in clusters " +
                              std::to_string(it->second) + " and " + std::to_string(ci));
      }
      if (!images.insert(id.image).second) {
        throw ValidationError("cluster " + std::to_string(ci) +
                              " holds two features of image " + std::to_string(id.image) +
                              " (at " + to_string(id) + ")");
      }
    }
  }
}

void validate(const Clustering& c, const FeatureSet& source) {
  validate_structure(c);
  std::size_t seen = 0;
  for (const Cluster& cluster : c.clusters) {
    for (const FeatureId& id : cluster) {
      if (!source.find(id)) {
        throw ValidationError("feature " + to_string(id) + " is not in the feature set");
      }
      ++seen;
    }
  }
  if (seen != source.size()) {
    for (const FeatureId& id : source.ids()) {
      bool found = false;
      for (const Cluster& cluster : c.clusters) {
        if (std::find(cluster.begin(), cluster.end(), id) != cluster.end()) {
          found = true;
          break;
        }
      }
      if (!found) throw ValidationError("feature " + to_string(id) + " is in no cluster");
    }
  }
}

std::vector<std::size_t> labels_by_row(const Clustering& c, const FeatureSet& source) {
  const Clustering canon = c.canonical();
  std::vector<std::size_t> labels(source.size(), SIZE_MAX);
  for (std::size_t ci = 0; ci < canon.clusters.size(); ++ci) {
    for (const FeatureId& id : canon.clusters[ci]) {
      const auto row = source.find(id);
      if (!row) throw InputError("feature " + to_string(id) + " is not in the feature set");
      labels[*row] = ci;
    }
  }
  for (std::size_t row = 0; row < labels.size(); ++row) {
    if (labels[row] == SIZE_MAX) {
      throw InputError("feature " + to_string(source.id(row)) + " is in no cluster");
    }
  }
  return labels;
}

Clustering from_labels(const FeatureSet& source, std::span<const std::int64_t> labels) {
  if (labels.size() != source.size()) throw InputError("label count does not match features");
  std::map<std::int64_t, Cluster> groups;
  for (std::size_t row = 0; row < labels.size(); ++row) {
    groups[labels[row]].push_back(source.id(row));
  }
  Clustering out;
  for (auto& [label, members] : groups) out.clusters.push_back(std::move(members));
  out.canonicalize();
  return out;
}

std::string to_json(const Clustering& c) {
  const Clustering canon = c.canonical();
  nlohmann::json clusters = nlohmann::json::array();
  for (const Cluster& cluster : canon.clusters) {
    nlohmann::json members = nlohmann::json::array();
    for (const FeatureId& id : cluster) members.push_back({id.image, id.index});
    clusters.push_back(std::move(members));
  }
  nlohmann::json doc;
  doc["clusters"] = std::move(clusters);
  doc["meta"] = c.provenance.is_object() ? c.provenance : nlohmann::json::object();
  return doc.dump() + "\n";
}

Clustering clustering_from_json(const std::string& text, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(source + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("clusters") || !doc["clusters"].is_array()) {
    throw InputError(source + ": expected an object with a \"clusters\" array");
  }
  Clustering out;
  for (const auto& cluster : doc["clusters"]) {
    if (!cluster.is_array()) throw InputError(source + ": cluster is not an array");
    Cluster members;
    for (const auto& id : cluster) {
      if (!id.is_array() || id.size() != 2 || !id[0].is_number_integer() ||
          !id[1].is_number_integer()) {
        throw InputError(source + ": feature id must be [image, index]");
      }
      members.push_back({id[0].get<std::int64_t>(), id[1].get<std::int64_t>()});
    }
    out.clusters.push_back(std::move(members));
  }
  if (doc.contains("meta")) out.provenance = doc["meta"];
  validate_structure(out);
  out.canonicalize();
  return out;
}

void save_clustering(const Clustering& c, const std::filesystem::path& path,
                     const FeatureSet* source) {
  if (source) {
    validate(c, *source);
  } else {
    validate_structure(c);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(c);
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

Clustering load_clustering(const std::filesystem::path& path) {
  return clustering_from_json(read_file(path), path.string());
}

std::string format_labels(const Clustering& c) {
  const Clustering canon = c.canonical();
  std::vector<std::pair<FeatureId, std::size_t>> rows;
  for (std::size_t ci = 0; ci < canon.clusters.size(); ++ci) {
    for (const FeatureId& id : canon.clusters[ci]) rows.emplace_back(id, ci);
  }
  std::sort(rows.begin(), rows.end());
  std::string out = "# image_id feature_id label\n";
  for (const auto& [id, label] : rows) {
    out += std::to_string(id.image) + " " + std::to_string(id.index) + " " +
           std::to_string(label) + "\n";
  }
  return out;
}

Clustering parse_labels(const std::string& text, const std::string& source) {
  std::map<std::int64_t, Cluster> groups;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream row(line);
    std::int64_t image = 0, index = 0, label = 0;
    if (!(row >> image)) continue;
    if (!(row >> index >> label)) {
      throw ParseError(source, line_no, "expected `image_id feature_id label`");
    }
    std::string extra;
    if (row >> extra) throw ParseError(source, line_no, "trailing token `" + extra + "`");
    groups[label].push_back({image, index});
  }
  if (groups.empty()) throw InputError(source + ": no labels");
  Clustering out;
  for (auto& [label, members] : groups) out.clusters.push_back(std::move(members));
  validate_structure(out);
  out.canonicalize();
  return out;
}

Clustering load_labels(const std::filesystem::path& path) {
  return parse_labels(read_file(path), path.string());
}

}  // namespace qm
