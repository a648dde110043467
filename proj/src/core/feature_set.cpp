#include "core/feature_set.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace qm {

std::string to_string(const FeatureId& id) {
  return "(" + std::to_string(id.image) + "," + std::to_string(id.index) + ")";
}

double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InputError("distance: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  return distance_unchecked(a.data(), b.data(), a.size());
}

FeatureSet::FeatureSet(std::size_t dim, std::vector<FeatureId> ids, std::vector<double> values)
    : dim_(dim), ids_(std::move(ids)), values_(std::move(values)) {
  if (dim_ == 0) throw InputError("feature dimension must be at least 1");
  if (values_.size() != ids_.size() * dim_) {
    throw InputError("feature values do not match " + std::to_string(ids_.size()) + " x " +
                     std::to_string(dim_));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw InputError("feature value is not finite");
  }
  for (std::size_t row = 0; row < ids_.size(); ++row) {
    const FeatureId& id = ids_[row];
    if (id.image < 0 || id.index < 0) {
      throw InputError("negative feature id " + to_string(id));
    }
    if (!row_of_id_.emplace(id, row).second) {
      throw InputError("duplicate feature id " + to_string(id));
    }
    image_ids_.push_back(id.image);
  }
  std::sort(image_ids_.begin(), image_ids_.end());
  image_ids_.erase(std::unique(image_ids_.begin(), image_ids_.end()), image_ids_.end());
  image_of_row_.reserve(ids_.size());
  for (const FeatureId& id : ids_) {
    const auto it = std::lower_bound(image_ids_.begin(), image_ids_.end(), id.image);
    image_of_row_.push_back(static_cast<std::size_t>(it - image_ids_.begin()));
  }
}

std::optional<std::size_t> FeatureSet::find(const FeatureId& id) const {
  const auto it = row_of_id_.find(id);
  if (it == row_of_id_.end()) return std::nullopt;
  return it->second;
}

FeatureSet FeatureSet::subset(std::span<const std::size_t> rows) const {
  std::vector<FeatureId> ids;
  std::vector<double> values;
  ids.reserve(rows.size());
  values.reserve(rows.size() * dim_);
  for (std::size_t row : rows) {
    ids.push_back(ids_.at(row));
    const auto v = vector(row);
    values.insert(values.end(), v.begin(), v.end());
  }
  if (ids.empty()) {
    FeatureSet empty;
    empty.dim_ = dim_;
    return empty;
  }
  return FeatureSet(dim_, std::move(ids), std::move(values));
}

std::pair<std::vector<double>, std::vector<double>> FeatureSet::bounds() const {
  std::vector<double> lo(dim_, 0.0), hi(dim_, 0.0);
  if (empty()) return {lo, hi};
  for (std::size_t j = 0; j < dim_; ++j) lo[j] = hi[j] = values_[j];
  for (std::size_t row = 1; row < size(); ++row) {
    const double* x = data(row);
    for (std::size_t j = 0; j < dim_; ++j) {
      lo[j] = std::min(lo[j], x[j]);
      hi[j] = std::max(hi[j], x[j]);
    }
  }
  return {lo, hi};
}

namespace {

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  const char* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

FeatureSet parse_features(const std::string& text, const std::string& source) {
  std::vector<FeatureId> ids;
  std::vector<double> values;
  std::map<FeatureId, std::size_t> seen;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    const auto tokens = split_tokens(view);
    if (tokens.empty()) continue;
    if (tokens.size() < 3) {
      throw ParseError(source, line_no, "expected `image_id feature_id v1 ... vF`");
    }
    FeatureId id;
    if (!parse_number(tokens[0], id.image) || !parse_number(tokens[1], id.index)) {
      throw ParseError(source, line_no, "feature ids must be integers");
    }
    if (id.image < 0 || id.index < 0) {
      throw ParseError(source, line_no, "feature ids must be non-negative");
    }
    const std::size_t row_dim = tokens.size() - 2;
    if (dim == 0) {
      dim = row_dim;
    } else if (row_dim != dim) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(dim) + " values, found " +
                           std::to_string(row_dim));
    }
    if (const auto [it, inserted] = seen.emplace(id, line_no); !inserted) {
      throw ParseError(source, line_no,
                       "duplicate feature id " + to_string(id) + " (first on line " +
                           std::to_string(it->second) + ")");
    }
    for (std::size_t t = 2; t < tokens.size(); ++t) {
      double v = 0.0;
      if (!parse_number(tokens[t], v) || !std::isfinite(v)) {
        throw ParseError(source, line_no, "bad value `" + std::string(tokens[t]) + "`");
      }
      values.push_back(v);
    }
    ids.push_back(id);
  }
  if (ids.empty()) throw InputError(source + ": no features");
  return FeatureSet(dim, std::move(ids), std::move(values));
}

FeatureSet load_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_features(buf.str(), path.string());
}

std::string format_features(const FeatureSet& fs) {
  std::string out;
  char buf[64];
  for (std::size_t row = 0; row < fs.size(); ++row) {
    const FeatureId& id = fs.id(row);
    out += std::to_string(id.image);
    out += ' ';
    out += std::to_string(id.index);
    for (double v : fs.vector(row)) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out += ' ';
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

void save_features(const FeatureSet& fs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_features(fs);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace qm
