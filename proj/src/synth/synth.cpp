#include "synth/synth.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace qm {

void SynthConfig::check() const {
  if (n_clusters == 0) throw InputError("n_clusters must be >= 1");
  if (per_cluster == 0) throw InputError("per_cluster must be >= 1");
  if (dim == 0) throw InputError("dim must be >= 1");
  if (!(spread > 0.0) || !std::isfinite(spread)) throw InputError("spread must be > 0");
  if (!(extent > 0.0) || !std::isfinite(extent)) throw InputError("extent must be > 0");
}

nlohmann::json SynthConfig::to_json() const {
  return {{"n_clusters", n_clusters}, {"per_cluster", per_cluster}, {"dim", dim},
          {"spread", spread},         {"extent", extent},           {"seed", seed}};
}

SynthData generate_blobs(const SynthConfig& cfg) {
  cfg.check();
  SynthData out;
  const std::size_t side =
      cfg.dim == 1 ? cfg.n_clusters
                   : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(cfg.n_clusters))));
  const double step = side > 1 ? cfg.extent / static_cast<double>(side - 1) : 0.0;
  for (std::size_t c = 0; c < cfg.n_clusters; ++c) {
    std::vector<double> center(cfg.dim, 0.0);
    if (cfg.dim == 1) {
      center[0] = step * static_cast<double>(c);
    } else {
      center[0] = step * static_cast<double>(c % side);
      center[1] = step * static_cast<double>(c / side);
    }
    out.centers.push_back(std::move(center));
  }

  Rng rng(cfg.seed);
  std::vector<FeatureId> ids;
  std::vector<double> values;
  for (std::size_t c = 0; c < cfg.n_clusters; ++c) {
    Cluster members;
    for (std::size_t j = 0; j < cfg.per_cluster; ++j) {
      const FeatureId id{static_cast<std::int64_t>(j), static_cast<std::int64_t>(c)};
      ids.push_back(id);
      members.push_back(id);
      for (std::size_t k = 0; k < cfg.dim; ++k) {
        values.push_back(out.centers[c][k] + cfg.spread * rng.normal());
      }
    }
    out.truth.clusters.push_back(std::move(members));
  }
  out.features = FeatureSet(cfg.dim, std::move(ids), std::move(values));
  out.truth.provenance = {{"algorithm", "ground-truth"}, {"synth", cfg.to_json()}};
  out.truth.canonicalize();
  return out;
}

nlohmann::json DetectionConfig::to_json() const {
  return {{"dim", dim},
          {"object_points", object_points},
          {"background_points", background_points},
          {"positive_images", positive_images},
          {"negative_images", negative_images},
          {"object_visibility", object_visibility},
          {"background_per_image", background_per_image},
          {"reference_background", reference_background},
          {"extent", extent},
          {"spread", spread},
          {"seed", seed}};
}

DetectionData generate_detection(const DetectionConfig& cfg) {
  if (cfg.dim == 0 || cfg.object_points == 0 || cfg.positive_images == 0) {
    throw InputError("detection scenario needs dim, object points and positives");
  }
  if (std::max(cfg.background_per_image, cfg.reference_background) > cfg.background_points) {
    throw InputError("background_per_image exceeds background_points");
  }
  Rng rng(cfg.seed);
  auto random_point = [&] {
    std::vector<double> p(cfg.dim);
    for (double& v : p) v = rng.uniform(0.0, cfg.extent);
    return p;
  };
  std::vector<std::vector<double>> object, background;
  for (std::size_t i = 0; i < cfg.object_points; ++i) object.push_back(random_point());
  for (std::size_t i = 0; i < cfg.background_points; ++i) background.push_back(random_point());

  DetectionData out;
  std::vector<FeatureId> ids;
  std::vector<double> values;
  auto emit = [&](std::int64_t image, std::int64_t& index, const std::vector<double>& entity) {
    ids.push_back({image, index++});
    for (double v : entity) values.push_back(v + cfg.spread * rng.normal());
  };

  std::vector<std::size_t> pool(background.size());
  auto emit_background = [&](std::int64_t image, std::int64_t& index, std::size_t count) {
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t j = k + rng.below(pool.size() - k);
      std::swap(pool[k], pool[j]);
      emit(image, index, background[pool[k]]);
    }
  };

  std::int64_t index = 0;
  for (const auto& p : object) emit(0, index, p);
  emit_background(0, index, cfg.reference_background);

  const std::size_t n_query = cfg.positive_images + cfg.negative_images;
  std::vector<bool> positive(n_query, false);
  std::fill(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(cfg.positive_images), true);
  // Interleave deterministically so positives are not all at the front.
  for (std::size_t i = n_query; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(positive[i - 1], positive[j]);
  }

  for (std::size_t q = 0; q < n_query; ++q) {
    const std::int64_t image = static_cast<std::int64_t>(q + 1);
    index = 0;
    if (positive[q]) {
      for (const auto& p : object) {
        if (rng.uniform01() < cfg.object_visibility) emit(image, index, p);
      }
    }
    emit_background(image, index, cfg.background_per_image);
    out.query_images.push_back(image);
    out.contains_object.push_back(positive[q]);
  }
  out.features = FeatureSet(cfg.dim, std::move(ids), std::move(values));
  out.reference_image = 0;
  return out;
}

}  // namespace qm
