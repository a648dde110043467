#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qm {

// (image, feature-within-image) as it appears in the input file.
struct FeatureId {
  std::int64_t image = 0;
  std::int64_t index = 0;

  auto operator<=>(const FeatureId&) const = default;
};

std::string to_string(const FeatureId& id);

// Euclidean distance. Throws InputError on dimension mismatch.
double distance(std::span<const double> a, std::span<const double> b);

// Same as distance() without the size check, for inner loops.
inline double distance_unchecked(const double* a, const double* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double d = a[j] - b[j];
    acc += d * d;
  }
  return std::sqrt(acc);
}

// Immutable collection of descriptors. Rows keep their input order. Image ids
// are remapped to dense indices 0..N-1 (sorted by original id) for internal
// bookkeeping; the original ids stay available through id().
class FeatureSet {
 public:
  FeatureSet() = default;

  // Validates: dim >= 1, values.size() == ids.size() * dim, all values
  // finite, no duplicate ids, no negative ids.
  FeatureSet(std::size_t dim, std::vector<FeatureId> ids, std::vector<double> values);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t dim() const { return dim_; }
  std::size_t image_count() const { return image_ids_.size(); }

  const FeatureId& id(std::size_t row) const { return ids_[row]; }
  const std::vector<FeatureId>& ids() const { return ids_; }

  // Dense image index of a row.
  std::size_t image(std::size_t row) const { return image_of_row_[row]; }
  // Original image id of a dense image index.
  std::int64_t image_id(std::size_t dense) const { return image_ids_[dense]; }
  const std::vector<std::int64_t>& image_ids() const { return image_ids_; }

  std::span<const double> vector(std::size_t row) const {
    return {values_.data() + row * dim_, dim_};
  }
  const double* data(std::size_t row) const { return values_.data() + row * dim_; }
  const std::vector<double>& values() const { return values_; }

  double distance(std::size_t a, std::size_t b) const {
    return distance_unchecked(data(a), data(b), dim_);
  }

  std::optional<std::size_t> find(const FeatureId& id) const;

  // New set holding the given rows, in the given order.
  FeatureSet subset(std::span<const std::size_t> rows) const;

  // Per-dimension [min, max] over all rows.
  std::pair<std::vector<double>, std::vector<double>> bounds() const;

  friend bool operator==(const FeatureSet& a, const FeatureSet& b) {
    return a.dim_ == b.dim_ && a.ids_ == b.ids_ && a.values_ == b.values_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<FeatureId> ids_;
  std::vector<double> values_;
  std::vector<std::size_t> image_of_row_;
  std::vector<std::int64_t> image_ids_;
  std::map<FeatureId, std::size_t> row_of_id_;
};

// Descriptor text format: `image_id feature_id v1 ... vF` per line,
// whitespace separated, '#' starts a comment, dimension taken from the first
// data row.
FeatureSet parse_features(const std::string& text, const std::string& source = "<text>");
FeatureSet load_features(const std::filesystem::path& path);
std::string format_features(const FeatureSet& fs);
void save_features(const FeatureSet& fs, const std::filesystem::path& path);

}  // namespace qm
