#include "quickmatch/quickmatch.h"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "core/clustering.hpp"
#include "core/error.hpp"
#include "core/feature_set.hpp"
#include "distributed/distributed.hpp"
#include "eval/metrics.hpp"
#include "match/quickmatch.hpp"
#include "partition/partition.hpp"
#include "report/report.hpp"
#include "synth/synth.hpp"

struct qm_features {
  qm::FeatureSet fs;
};

struct qm_clustering {
  qm::Clustering c;
};

struct qm_partition {
  qm::Partition p;
};

struct qm_drun {
  qm::FeatureSet fs;
  qm::DistributedParams params;
  qm::DistributedResult result;
};

namespace {

thread_local std::string g_last_error;

qm_status fail(qm_status status, const std::string& msg) {
  g_last_error = msg;
  return status;
}

// Runs `fn`, mapping library exceptions onto status codes.
template <typename Fn>
qm_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return QM_OK;
  } catch (const qm::ParseError& e) {
    return fail(QM_ERR_PARSE, e.what());
  } catch (const qm::ValidationError& e) {
    return fail(QM_ERR_VALIDATION, e.what());
  } catch (const qm::InputError& e) {
    return fail(QM_ERR_INPUT, e.what());
  } catch (const qm::IoError& e) {
    return fail(QM_ERR_IO, e.what());
  } catch (const qm::InvariantError& e) {
    return fail(QM_ERR_INVARIANT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(QM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(QM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(QM_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw qm::InputError(std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

qm::Kernel to_kernel(qm_kernel k) {
  switch (k) {
    case QM_KERNEL_GAUSSIAN: return qm::Kernel::Gaussian;
    case QM_KERNEL_GAUSSIAN_SQUARED: return qm::Kernel::GaussianSquared;
    case QM_KERNEL_QUADRATIC: return qm::Kernel::Quadratic;
    case QM_KERNEL_QUADRATIC_AS_PRINTED: return qm::Kernel::QuadraticAsPrinted;
  }
  throw qm::InputError("unknown kernel " + std::to_string(static_cast<int>(k)));
}

qm::MatchParams to_params(const qm_match_params* p) {
  qm::MatchParams out;
  if (p) {
    out.rho = p->rho;
    out.kernel = to_kernel(p->kernel);
  }
  out.check();
  return out;
}

qm::DistributedParams to_params(const qm_dmatch_params* p) {
  qm::DistributedParams out;
  if (p) {
    out.agents = p->agents;
    out.match = {p->rho, to_kernel(p->kernel)};
    switch (p->seeding) {
      case QM_SEEDING_KMEANS: out.seeding = qm::Seeding::KMeans; break;
      case QM_SEEDING_RANDOM: out.seeding = qm::Seeding::Random; break;
      default: throw qm::InputError("unknown seeding");
    }
    out.seed = p->seed;
    out.threads = p->threads;
    out.contested_sigma = p->contested_sigma == QM_CONTESTED_AGENT_MAX
                              ? qm::ContestedSigma::AgentMax
                              : qm::ContestedSigma::PerFeature;
  }
  out.check();
  return out;
}

}  // namespace

extern "C" {

const char* qm_last_error(void) { return g_last_error.c_str(); }

const char* qm_version(void) { return "1.0.0"; }

void qm_string_free(char* s) { std::free(s); }

qm_status qm_kernel_from_name(const char* name, qm_kernel* out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    switch (qm::kernel_from_string(name)) {
      case qm::Kernel::Gaussian: *out = QM_KERNEL_GAUSSIAN; break;
      case qm::Kernel::GaussianSquared: *out = QM_KERNEL_GAUSSIAN_SQUARED; break;
      case qm::Kernel::Quadratic: *out = QM_KERNEL_QUADRATIC; break;
      case qm::Kernel::QuadraticAsPrinted: *out = QM_KERNEL_QUADRATIC_AS_PRINTED; break;
    }
  });
}

qm_status qm_seeding_from_name(const char* name, qm_seeding* out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    *out = qm::seeding_from_string(name) == qm::Seeding::KMeans ? QM_SEEDING_KMEANS
                                                                 : QM_SEEDING_RANDOM;
  });
}

// ---- features

qm_status qm_features_load(const char* path, qm_features** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new qm_features{qm::load_features(path)};
  });
}

qm_status qm_features_parse(const char* text, qm_features** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new qm_features{qm::parse_features(text)};
  });
}

qm_status qm_features_create(size_t dim, size_t count, const int64_t* images,
                             const int64_t* indices, const double* values, qm_features** out) {
  return guarded([&] {
    require(out, "out");
    if (count > 0) {
      require(images, "images");
      require(indices, "indices");
      require(values, "values");
    }
    std::vector<qm::FeatureId> ids(count);
    for (size_t i = 0; i < count; ++i) ids[i] = {images[i], indices[i]};
    std::vector<double> v(values, values + count * dim);
    *out = new qm_features{qm::FeatureSet(dim, std::move(ids), std::move(v))};
  });
}

qm_status qm_features_save(const qm_features* fs, const char* path) {
  return guarded([&] {
    require(fs, "features");
    require(path, "path");
    qm::save_features(fs->fs, path);
  });
}

void qm_features_free(qm_features* fs) { delete fs; }

size_t qm_features_count(const qm_features* fs) { return fs ? fs->fs.size() : 0; }
size_t qm_features_dim(const qm_features* fs) { return fs ? fs->fs.dim() : 0; }
size_t qm_features_image_count(const qm_features* fs) { return fs ? fs->fs.image_count() : 0; }

qm_status qm_features_id(const qm_features* fs, size_t row, int64_t* image, int64_t* index) {
  return guarded([&] {
    require(fs, "features");
    if (row >= fs->fs.size()) throw qm::InputError("row out of range");
    const qm::FeatureId id = fs->fs.id(row);
    if (image) *image = id.image;
    if (index) *index = id.index;
  });
}

const double* qm_features_vector(const qm_features* fs, size_t row) {
  if (!fs || row >= fs->fs.size()) return nullptr;
  return fs->fs.data(row);
}

qm_status qm_distance(const double* a, const double* b, size_t dim, double* out) {
  return guarded([&] {
    require(out, "out");
    if (dim > 0) {
      require(a, "a");
      require(b, "b");
    }
    *out = qm::distance(std::span<const double>(a, dim), std::span<const double>(b, dim));
  });
}

// ---- synthetic data

void qm_synth_config_default(qm_synth_config* cfg) {
  if (!cfg) return;
  const qm::SynthConfig d;
  *cfg = {d.n_clusters, d.per_cluster, d.dim, d.spread, d.extent, d.seed};
}

qm_status qm_synth_generate(const qm_synth_config* cfg, qm_features** features,
                            qm_clustering** truth) {
  return guarded([&] {
    require(features, "features");
    qm::SynthConfig c;
    if (cfg) {
      c.n_clusters = cfg->n_clusters;
      c.per_cluster = cfg->per_cluster;
      c.dim = cfg->dim;
      c.spread = cfg->spread;
      c.extent = cfg->extent;
      c.seed = cfg->seed;
    }
    qm::SynthData data = qm::generate_blobs(c);
    auto* f = new qm_features{std::move(data.features)};
    if (truth) {
      try {
        *truth = new qm_clustering{std::move(data.truth)};
      } catch (...) {
        delete f;
        throw;
      }
    }
    *features = f;
  });
}

// ---- clustering

void qm_match_params_default(qm_match_params* p) {
  if (!p) return;
  p->rho = qm::MatchParams{}.rho;
  p->kernel = QM_KERNEL_GAUSSIAN;
}

qm_status qm_match(const qm_features* fs, const qm_match_params* params, qm_clustering** out) {
  return guarded([&] {
    require(fs, "features");
    require(out, "out");
    *out = new qm_clustering{qm::quickmatch(fs->fs, to_params(params))};
  });
}

qm_status qm_match_report(const qm_features* fs, const qm_match_params* params,
                          const qm_clustering* c, double seconds, char** json) {
  return guarded([&] {
    require(fs, "features");
    require(c, "clustering");
    require(json, "json");
    *json = dup_string(qm::match_report(fs->fs, to_params(params), c->c, seconds).dump(2) + "\n");
  });
}

qm_status qm_clustering_load(const char* path, qm_clustering** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new qm_clustering{qm::load_clustering(path)};
  });
}

qm_status qm_clustering_load_labels(const char* path, qm_clustering** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new qm_clustering{qm::load_labels(path)};
  });
}

qm_status qm_clustering_save(const qm_clustering* c, const qm_features* source,
                             const char* path) {
  return guarded([&] {
    require(c, "clustering");
    require(path, "path");
    qm::save_clustering(c->c, path, source ? &source->fs : nullptr);
  });
}

qm_status qm_clustering_save_labels(const qm_clustering* c, const char* path) {
  return guarded([&] {
    require(c, "clustering");
    require(path, "path");
    const std::string text = qm::format_labels(c->c);
    std::FILE* f = std::fopen(path, "wb");
    if (!f) throw qm::IoError(std::string("cannot open ") + path + " for writing");
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    if (std::fclose(f) != 0 || !ok) throw qm::IoError(std::string("write failed: ") + path);
  });
}

qm_status qm_clustering_to_json(const qm_clustering* c, char** json) {
  return guarded([&] {
    require(c, "clustering");
    require(json, "json");
    *json = dup_string(qm::to_json(c->c));
  });
}

qm_status qm_clustering_validate(const qm_clustering* c, const qm_features* source) {
  return guarded([&] {
    require(c, "clustering");
    if (source) {
      qm::validate(c->c, source->fs);
    } else {
      qm::validate_structure(c->c);
    }
  });
}

void qm_clustering_free(qm_clustering* c) { delete c; }

size_t qm_clustering_cluster_count(const qm_clustering* c) {
  return c ? c->c.clusters.size() : 0;
}

size_t qm_clustering_feature_count(const qm_clustering* c) {
  return c ? c->c.feature_count() : 0;
}

qm_status qm_clustering_labels(const qm_clustering* c, const qm_features* source,
                               size_t* labels) {
  return guarded([&] {
    require(c, "clustering");
    require(source, "features");
    require(labels, "labels");
    const auto l = qm::labels_by_row(c->c, source->fs);
    std::copy(l.begin(), l.end(), labels);
  });
}

// ---- partition

qm_status qm_partition_kmeans(const qm_features* fs, size_t agents, uint64_t seed,
                              qm_partition** out) {
  return guarded([&] {
    require(fs, "features");
    require(out, "out");
    *out = new qm_partition{qm::kmeans_seeds(fs->fs, agents, seed)};
  });
}

qm_status qm_partition_random(const qm_features* fs, size_t agents, uint64_t seed,
                              qm_partition** out) {
  return guarded([&] {
    require(fs, "features");
    require(out, "out");
    *out = new qm_partition{qm::random_seeds(fs->fs, agents, seed)};
  });
}

qm_status qm_partition_from_seeds(const qm_features* fs, size_t agents, const double* seeds,
                                  qm_partition** out) {
  return guarded([&] {
    require(fs, "features");
    require(out, "out");
    if (agents == 0) throw qm::InputError("agents must be >= 1");
    require(seeds, "seeds");
    const size_t dim = fs->fs.dim();
    std::vector<std::vector<double>> s(agents);
    for (size_t a = 0; a < agents; ++a) s[a].assign(seeds + a * dim, seeds + (a + 1) * dim);
    *out = new qm_partition{qm::Partition(fs->fs, std::move(s), "explicit")};
  });
}

qm_status qm_partition_load(const char* path, const qm_features* fs, qm_partition** out) {
  return guarded([&] {
    require(path, "path");
    require(fs, "features");
    require(out, "out");
    std::FILE* f = std::fopen(path, "rb");
    if (!f) throw qm::IoError(std::string("cannot open ") + path);
    std::string text;
    char buf[4096];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, n);
    std::fclose(f);
    *out = new qm_partition{qm::partition_from_json(text, fs->fs)};
  });
}

qm_status qm_partition_save(const qm_partition* p, const qm_features* fs, const char* path) {
  return guarded([&] {
    require(p, "partition");
    require(fs, "features");
    require(path, "path");
    const std::string text = qm::partition_to_json(p->p, fs->fs);
    std::FILE* f = std::fopen(path, "wb");
    if (!f) throw qm::IoError(std::string("cannot open ") + path + " for writing");
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    if (std::fclose(f) != 0 || !ok) throw qm::IoError(std::string("write failed: ") + path);
  });
}

void qm_partition_free(qm_partition* p) { delete p; }

size_t qm_partition_agents(const qm_partition* p) { return p ? p->p.agents() : 0; }

size_t qm_partition_owner(const qm_partition* p, size_t row) {
  if (!p || row >= p->p.assignment().size()) return SIZE_MAX;
  return p->p.owner(row);
}

const double* qm_partition_seed(const qm_partition* p, size_t a) {
  if (!p || a >= p->p.agents()) return nullptr;
  return p->p.seed(a).data();
}

qm_status qm_boundary_distance(const qm_partition* p, const double* x, size_t dim, size_t from,
                               size_t to, double* d_min, double* x_min) {
  return guarded([&] {
    require(p, "partition");
    require(x, "x");
    require(d_min, "d_min");
    if (dim != p->p.dim()) throw qm::InputError("dimension mismatch");
    if (from >= p->p.agents() || to >= p->p.agents()) throw qm::InputError("agent out of range");
    const auto r = qm::boundary_distance(std::span<const double>(x, dim), p->p, from, to);
    *d_min = r.d_min;
    if (x_min) std::copy(r.x_min.begin(), r.x_min.end(), x_min);
  });
}

// ---- distributed run

void qm_dmatch_params_default(qm_dmatch_params* p) {
  if (!p) return;
  const qm::DistributedParams d;
  p->agents = d.agents;
  p->rho = d.match.rho;
  p->kernel = QM_KERNEL_QUADRATIC;
  p->seeding = QM_SEEDING_KMEANS;
  p->seed = d.seed;
  p->threads = d.threads;
  p->contested_sigma = QM_CONTESTED_PER_FEATURE;
}

qm_status qm_dmatch(const qm_features* fs, const qm_dmatch_params* params, qm_drun** out) {
  return guarded([&] {
    require(fs, "features");
    require(out, "out");
    const auto p = to_params(params);
    *out = new qm_drun{fs->fs, p, qm::distributed_quickmatch(fs->fs, p)};
  });
}

qm_status qm_dmatch_with_partition(const qm_features* fs, const qm_partition* partition,
                                   const qm_dmatch_params* params, qm_drun** out) {
  return guarded([&] {
    require(fs, "features");
    require(partition, "partition");
    require(out, "out");
    auto p = to_params(params);
    p.agents = partition->p.agents();
    *out = new qm_drun{fs->fs, p, qm::run_distributed(fs->fs, partition->p, p)};
  });
}

void qm_drun_free(qm_drun* run) { delete run; }

qm_status qm_drun_clustering(const qm_drun* run, qm_clustering** out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    *out = new qm_clustering{run->result.clustering};
  });
}

qm_status qm_drun_partition(const qm_drun* run, qm_partition** out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    *out = new qm_partition{run->result.partition};
  });
}

qm_status qm_drun_report(const qm_drun* run, const qm_clustering* reference, char** json) {
  return guarded([&] {
    require(run, "run");
    require(json, "json");
    const auto report =
        qm::dmatch_report(run->fs, run->params, run->result, reference ? &reference->c : nullptr);
    *json = dup_string(report.dump(2) + "\n");
  });
}

qm_status qm_drun_table_row(const qm_drun* run, const qm_clustering* reference, char** csv_line) {
  return guarded([&] {
    require(run, "run");
    require(reference, "reference");
    require(csv_line, "csv_line");
    *csv_line = dup_string(qm::sweep_csv_line(qm::sweep_row(run->fs, run->result, reference->c)));
  });
}

const char* qm_table_header(void) {
  static const std::string header = qm::sweep_csv_header();
  return header.c_str();
}

qm_status qm_drun_ledger(const qm_drun* run, int include_vectors, char** json) {
  return guarded([&] {
    require(run, "run");
    require(json, "json");
    *json = dup_string(run->result.ledger.to_json(include_vectors != 0).dump() + "\n");
  });
}

uint64_t qm_drun_ledger_hash(const qm_drun* run) { return run ? run->result.ledger.hash() : 0; }

qm_status qm_drun_check_ledger(const qm_drun* run) {
  if (!run) return fail(QM_ERR_INPUT, "run is NULL");
  const auto check = qm::check_ledger(run->result.ledger, run->fs.size());
  if (check.ok()) {
    g_last_error.clear();
    return QM_OK;
  }
  std::string msg = "ledger check failed:";
  for (const auto& v : check.violations) msg += " " + v + ";";
  return fail(QM_ERR_INVARIANT, msg);
}

size_t qm_drun_owner(const qm_drun* run, size_t row, int round) {
  if (!run || row >= run->fs.size()) return SIZE_MAX;
  return round == 0 ? run->result.initial_owner[row] : run->result.final_owner[row];
}

int qm_drun_contested(const qm_drun* run, size_t row) {
  if (!run || row >= run->fs.size()) return 0;
  return run->result.triggers[row].empty() ? 0 : 1;
}

// ---- evaluation

qm_status qm_eval_compare(const qm_clustering* truth, const qm_clustering* pred, char** json) {
  return guarded([&] {
    require(truth, "truth");
    require(pred, "pred");
    require(json, "json");
    *json = dup_string(qm::compare_clusterings(truth->c, pred->c).to_json().dump(2) + "\n");
  });
}

qm_status qm_eval_split(const qm_clustering* c, const qm_features* fs,
                        const qm_partition* partition, char** json) {
  return guarded([&] {
    require(c, "clustering");
    require(fs, "features");
    require(partition, "partition");
    require(json, "json");
    if (partition->p.assignment().size() != fs->fs.size()) {
      throw qm::InputError("partition was built on a different feature set");
    }
    const auto r = qm::split_quality(c->c, fs->fs, partition->p.assignment());
    *json = dup_string(r.to_json().dump(2) + "\n");
  });
}

qm_status qm_report_digest(const char* json, uint64_t* out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
      throw qm::ParseError("<report>", 1, e.what());
    }
    *out = qm::report_digest(j);
  });
}

}  // extern "C"
