// qm: command-line front end over the quickmatch C API.
//
//   qm generate --out features.txt [--truth truth.txt]
//   qm match features.txt --out clusters.json [--report report.json]
//   qm dmatch features.txt --agents 4 --out clusters.json [--ledger ledger.json]
//   qm eval --pred clusters.json --truth truth.txt
//   qm compare features.txt --agents-list 1,2,4,8 --out-dir sweep/
//
// Exit codes: 0 success, 1 invalid input, 2 internal invariant violation.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "quickmatch/quickmatch.h"

namespace {

// Failure carried up to main() with the exit code it maps to.
struct Failure {
  int code;
  std::string message;
};

int exit_code(qm_status s) {
  switch (s) {
    case QM_OK: return 0;
    case QM_ERR_INVARIANT:
    case QM_ERR_INTERNAL: return 2;
    default: return 1;
  }
}

void check(qm_status s) {
  if (s != QM_OK) throw Failure{exit_code(s), qm_last_error()};
}

struct FeaturesDel { void operator()(qm_features* p) const { qm_features_free(p); } };
struct ClusteringDel { void operator()(qm_clustering* p) const { qm_clustering_free(p); } };
struct PartitionDel { void operator()(qm_partition* p) const { qm_partition_free(p); } };
struct RunDel { void operator()(qm_drun* p) const { qm_drun_free(p); } };
struct StringDel { void operator()(char* p) const { qm_string_free(p); } };

using Features = std::unique_ptr<qm_features, FeaturesDel>;
using ClusteringPtr = std::unique_ptr<qm_clustering, ClusteringDel>;
using PartitionPtr = std::unique_ptr<qm_partition, PartitionDel>;
using Run = std::unique_ptr<qm_drun, RunDel>;
using CString = std::unique_ptr<char, StringDel>;

Features load_features(const std::string& path) {
  qm_features* fs = nullptr;
  check(qm_features_load(path.c_str(), &fs));
  return Features(fs);
}

// Clustering JSON, or a label file for anything not ending in .json.
ClusteringPtr load_clustering(const std::string& path) {
  qm_clustering* c = nullptr;
  if (std::filesystem::path(path).extension() == ".json") {
    check(qm_clustering_load(path.c_str(), &c));
  } else {
    check(qm_clustering_load_labels(path.c_str(), &c));
  }
  return ClusteringPtr(c);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{1, "cannot open " + path + " for writing"};
  out << text;
  if (!out) throw Failure{1, "write failed: " + path};
}

std::string take(char* s) {
  CString guard(s);
  return s ? std::string(s) : std::string();
}

qm_kernel parse_kernel(const std::string& name) {
  qm_kernel k;
  check(qm_kernel_from_name(name.c_str(), &k));
  return k;
}

qm_seeding parse_seeding(const std::string& name) {
  qm_seeding s;
  check(qm_seeding_from_name(name.c_str(), &s));
  return s;
}

// ---- generate

struct GenerateOpts {
  qm_synth_config cfg{};
  std::string out;
  std::string truth;
};

void run_generate(const GenerateOpts& o) {
  if (!(o.cfg.spread > 0.0)) throw Failure{1, "spread must be > 0"};
  qm_features* fs = nullptr;
  qm_clustering* truth = nullptr;
  check(qm_synth_generate(&o.cfg, &fs, &truth));
  Features f(fs);
  ClusteringPtr t(truth);
  const std::string truth_path = o.truth.empty() ? o.out + ".truth" : o.truth;
  check(qm_features_save(f.get(), o.out.c_str()));
  check(qm_clustering_save_labels(t.get(), truth_path.c_str()));
  std::printf("wrote %zu features (%zu images, %zu clusters) to %s; truth to %s\n",
              qm_features_count(f.get()), qm_features_image_count(f.get()),
              qm_clustering_cluster_count(t.get()), o.out.c_str(), truth_path.c_str());
}

// ---- match

struct MatchOpts {
  std::string input;
  double rho = 1.1;
  std::string kernel = "gaussian";
  std::string out;
  std::string report;
};

void run_match(const MatchOpts& o) {
  Features fs = load_features(o.input);
  const qm_match_params params{o.rho, parse_kernel(o.kernel)};
  const auto start = std::chrono::steady_clock::now();
  qm_clustering* c = nullptr;
  check(qm_match(fs.get(), &params, &c));
  ClusteringPtr clustering(c);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  check(qm_clustering_save(clustering.get(), fs.get(), o.out.c_str()));
  if (!o.report.empty()) {
    char* json = nullptr;
    check(qm_match_report(fs.get(), &params, clustering.get(), seconds, &json));
    write_file(o.report, take(json));
  }
  std::printf("%zu features -> %zu clusters (%.3f s)\n", qm_features_count(fs.get()),
              qm_clustering_cluster_count(clustering.get()), seconds);
}

// ---- dmatch

struct DmatchOpts {
  std::string input;
  std::size_t agents = 4;
  double rho = 1.1;
  std::string kernel = "quadratic";
  std::string seeding = "kmeans";
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::string contested_sigma = "per-feature";
  std::string partition_in;
  std::string out;
  std::string report;
  std::string ledger;
  bool ledger_vectors = false;
  std::string partition_out;
};

qm_dmatch_params dmatch_params(const DmatchOpts& o) {
  if (o.agents < 1) throw Failure{1, "--agents must be >= 1"};
  qm_dmatch_params p;
  qm_dmatch_params_default(&p);
  p.agents = o.agents;
  p.rho = o.rho;
  p.kernel = parse_kernel(o.kernel);
  p.seeding = parse_seeding(o.seeding);
  p.seed = o.seed;
  p.threads = o.threads;
  if (o.contested_sigma == "per-feature") {
    p.contested_sigma = QM_CONTESTED_PER_FEATURE;
  } else if (o.contested_sigma == "agent-max") {
    p.contested_sigma = QM_CONTESTED_AGENT_MAX;
  } else {
    throw Failure{1, "unknown --contested-sigma '" + o.contested_sigma + "'"};
  }
  return p;
}

// Centralized run with the distributed kernel: the equivalence reference.
ClusteringPtr centralized(const qm_features* fs, const qm_dmatch_params& p) {
  const qm_match_params mp{p.rho, p.kernel};
  qm_clustering* c = nullptr;
  check(qm_match(fs, &mp, &c));
  return ClusteringPtr(c);
}

void run_dmatch(const DmatchOpts& o) {
  Features fs = load_features(o.input);
  const qm_dmatch_params params = dmatch_params(o);
  qm_drun* r = nullptr;
  if (!o.partition_in.empty()) {
    qm_partition* p = nullptr;
    check(qm_partition_load(o.partition_in.c_str(), fs.get(), &p));
    PartitionPtr part(p);
    if (qm_partition_agents(part.get()) != params.agents) {
      throw Failure{1, "partition has " + std::to_string(qm_partition_agents(part.get())) +
                           " agents, --agents is " + std::to_string(params.agents)};
    }
    check(qm_dmatch_with_partition(fs.get(), part.get(), &params, &r));
  } else {
    check(qm_dmatch(fs.get(), &params, &r));
  }
  Run run(r);
  check(qm_drun_check_ledger(run.get()));

  qm_clustering* c = nullptr;
  check(qm_drun_clustering(run.get(), &c));
  ClusteringPtr clustering(c);
  check(qm_clustering_save(clustering.get(), fs.get(), o.out.c_str()));

  if (!o.report.empty()) {
    ClusteringPtr reference = centralized(fs.get(), params);
    char* json = nullptr;
    check(qm_drun_report(run.get(), reference.get(), &json));
    write_file(o.report, take(json));
  }
  if (!o.ledger.empty()) {
    char* json = nullptr;
    check(qm_drun_ledger(run.get(), o.ledger_vectors ? 1 : 0, &json));
    write_file(o.ledger, take(json));
  }
  if (!o.partition_out.empty()) {
    qm_partition* p = nullptr;
    check(qm_drun_partition(run.get(), &p));
    PartitionPtr part(p);
    check(qm_partition_save(part.get(), fs.get(), o.partition_out.c_str()));
  }
  std::printf("%zu features, %zu agents -> %zu clusters; ledger %016llx\n",
              qm_features_count(fs.get()), params.agents,
              qm_clustering_cluster_count(clustering.get()),
              static_cast<unsigned long long>(qm_drun_ledger_hash(run.get())));
}

// ---- eval

struct EvalOpts {
  std::string pred;
  std::string truth;
  std::string features;
  std::string partition;
  std::string mode = "compare";
  std::string out;
};

void run_eval(const EvalOpts& o) {
  ClusteringPtr pred = load_clustering(o.pred);
  std::string json;
  if (o.mode == "compare") {
    if (o.truth.empty()) throw Failure{1, "eval compare needs --truth"};
    ClusteringPtr truth = load_clustering(o.truth);
    char* s = nullptr;
    check(qm_eval_compare(truth.get(), pred.get(), &s));
    json = take(s);
  } else if (o.mode == "split") {
    if (o.features.empty() || o.partition.empty()) {
      throw Failure{1, "eval split needs --features and --partition"};
    }
    Features fs = load_features(o.features);
    qm_partition* p = nullptr;
    check(qm_partition_load(o.partition.c_str(), fs.get(), &p));
    PartitionPtr part(p);
    char* s = nullptr;
    check(qm_eval_split(pred.get(), fs.get(), part.get(), &s));
    json = take(s);
  } else {
    throw Failure{1, "unknown --mode '" + o.mode + "' (compare|split)"};
  }
  if (o.out.empty()) {
    std::fputs(json.c_str(), stdout);
  } else {
    write_file(o.out, json);
  }
}

// ---- compare

struct CompareOpts {
  std::string input;
  std::vector<std::size_t> agents_list{1, 2, 4, 8};
  double rho = 1.1;
  std::string kernel = "quadratic";
  std::string seeding = "kmeans";
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::string out_dir = ".";
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::size_t> labels_of(const qm_clustering* c, const qm_features* fs) {
  std::vector<std::size_t> labels(qm_features_count(fs));
  check(qm_clustering_labels(c, fs, labels.data()));
  return labels;
}

void run_compare(const CompareOpts& o) {
  if (o.agents_list.empty()) throw Failure{1, "--agents-list is empty"};
  Features fs = load_features(o.input);
  const std::size_t n = qm_features_count(fs.get());
  const std::size_t dim = qm_features_dim(fs.get());
  std::filesystem::create_directories(o.out_dir);
  const std::filesystem::path dir(o.out_dir);

  DmatchOpts base;
  base.rho = o.rho;
  base.kernel = o.kernel;
  base.seeding = o.seeding;
  base.seed = o.seed;
  base.threads = o.threads;
  const qm_dmatch_params reference_params = dmatch_params(base);
  ClusteringPtr reference = centralized(fs.get(), reference_params);
  const auto reference_labels = labels_of(reference.get(), fs.get());

  std::string sweep = qm_table_header();
  std::string seeds = "agents,agent";
  for (std::size_t d = 0; d < dim; ++d) seeds += ",x" + std::to_string(d);
  seeds += "\n";

  struct Column {
    std::size_t agents;
    std::vector<std::size_t> initial, final_owner, cluster;
    std::vector<int> contested;
  };
  std::vector<Column> columns;

  for (std::size_t m : o.agents_list) {
    DmatchOpts opts = base;
    opts.agents = m;
    const qm_dmatch_params params = dmatch_params(opts);
    qm_drun* r = nullptr;
    check(qm_dmatch(fs.get(), &params, &r));
    Run run(r);
    check(qm_drun_check_ledger(run.get()));
    char* line = nullptr;
    check(qm_drun_table_row(run.get(), reference.get(), &line));
    sweep += take(line);

    qm_partition* p = nullptr;
    check(qm_drun_partition(run.get(), &p));
    PartitionPtr part(p);
    for (std::size_t a = 0; a < qm_partition_agents(part.get()); ++a) {
      const double* s = qm_partition_seed(part.get(), a);
      seeds += std::to_string(m) + "," + std::to_string(a);
      for (std::size_t d = 0; d < dim; ++d) seeds += "," + num(s[d]);
      seeds += "\n";
    }

    qm_clustering* c = nullptr;
    check(qm_drun_clustering(run.get(), &c));
    ClusteringPtr clustering(c);
    Column col{m, {}, {}, labels_of(clustering.get(), fs.get()), {}};
    for (std::size_t row = 0; row < n; ++row) {
      col.initial.push_back(qm_drun_owner(run.get(), row, 0));
      col.final_owner.push_back(qm_drun_owner(run.get(), row, 1));
      col.contested.push_back(qm_drun_contested(run.get(), row));
    }
    columns.push_back(std::move(col));
  }

  // One row per feature: coordinates, centralized cluster, then per sweep
  // entry the initial agent, final agent, distributed cluster, contested flag.
  std::string points = "image,index";
  for (std::size_t d = 0; d < dim; ++d) points += ",x" + std::to_string(d);
  points += ",cluster_centralized";
  for (const auto& col : columns) {
    const std::string m = std::to_string(col.agents);
    points += ",agent_m" + m + ",final_agent_m" + m + ",cluster_m" + m + ",contested_m" + m;
  }
  points += "\n";
  for (std::size_t row = 0; row < n; ++row) {
    int64_t image = 0, index = 0;
    check(qm_features_id(fs.get(), row, &image, &index));
    points += std::to_string(image) + "," + std::to_string(index);
    const double* x = qm_features_vector(fs.get(), row);
    for (std::size_t d = 0; d < dim; ++d) points += "," + num(x[d]);
    points += "," + std::to_string(reference_labels[row]);
    for (const auto& col : columns) {
      points += "," + std::to_string(col.initial[row]) + "," + std::to_string(col.final_owner[row]) +
                "," + std::to_string(col.cluster[row]) + "," + std::to_string(col.contested[row]);
    }
    points += "\n";
  }

  write_file((dir / "sweep.csv").string(), sweep);
  write_file((dir / "points.csv").string(), points);
  write_file((dir / "seeds.csv").string(), seeds);
  std::printf("swept %zu configurations; wrote sweep.csv, points.csv, seeds.csv to %s\n",
              columns.size(), o.out_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QuickMatch and Distributed QuickMatch multi-image feature matching"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qm_version()));

  const std::vector<std::string> kernels{"gaussian", "gaussian-squared", "quadratic",
                                         "quadratic-as-printed"};
  const std::vector<std::string> seedings{"kmeans", "random"};

  GenerateOpts gen;
  qm_synth_config_default(&gen.cfg);
  auto* g = app.add_subcommand("generate", "Synthetic Gaussian blobs plus ground-truth labels");
  g->add_option("--clusters", gen.cfg.n_clusters, "Number of blobs")->envname("QM_CLUSTERS")->capture_default_str();
  g->add_option("--per-cluster", gen.cfg.per_cluster, "Samples per blob (one per image)")->envname("QM_PER_CLUSTER")->capture_default_str();
  g->add_option("--dim", gen.cfg.dim, "Feature dimension")->envname("QM_DIM")->capture_default_str();
  g->add_option("--spread", gen.cfg.spread, "Per-coordinate standard deviation")->envname("QM_SPREAD")->capture_default_str();
  g->add_option("--extent", gen.cfg.extent, "Grid spans [0, extent]")->envname("QM_EXTENT")->capture_default_str();
  g->add_option("--seed", gen.cfg.seed, "RNG seed")->envname("QM_SEED")->capture_default_str();
  g->add_option("--out", gen.out, "Feature file to write")->envname("QM_OUT")->required();
  g->add_option("--truth", gen.truth, "Ground-truth label file (default: <out>.truth)")->envname("QM_TRUTH");

  MatchOpts mo;
  auto* m = app.add_subcommand("match", "Centralized QuickMatch");
  m->add_option("input", mo.input, "Feature file")->required();
  m->add_option("--rho", mo.rho, "Merge threshold factor")->envname("QM_RHO")->capture_default_str();
  m->add_option("--kernel", mo.kernel, "Density kernel")->envname("QM_KERNEL")->check(CLI::IsMember(kernels))->capture_default_str();
  m->add_option("--out", mo.out, "Clustering JSON to write")->envname("QM_OUT")->required();
  m->add_option("--report", mo.report, "Run report JSON")->envname("QM_REPORT");

  DmatchOpts dmo;
  auto* d = app.add_subcommand("dmatch", "Distributed QuickMatch on a simulated network");
  d->add_option("input", dmo.input, "Feature file")->required();
  d->add_option("--agents", dmo.agents, "Number of agents")->envname("QM_AGENTS")->capture_default_str();
  d->add_option("--rho", dmo.rho, "Merge threshold factor")->envname("QM_RHO")->capture_default_str();
  d->add_option("--kernel", dmo.kernel, "Density kernel")->envname("QM_KERNEL")->check(CLI::IsMember(kernels))->capture_default_str();
  d->add_option("--seeding", dmo.seeding, "Voronoi seeding")->envname("QM_SEEDING")->check(CLI::IsMember(seedings))->capture_default_str();
  d->add_option("--seed", dmo.seed, "Seeding RNG seed")->envname("QM_SEED")->capture_default_str();
  d->add_option("--threads", dmo.threads, "Worker threads for per-agent phases")->envname("QM_THREADS")->capture_default_str();
  d->add_option("--contested-sigma", dmo.contested_sigma, "per-feature|agent-max")->envname("QM_CONTESTED_SIGMA")->check(CLI::IsMember({"per-feature", "agent-max"}))->capture_default_str();
  d->add_option("--partition", dmo.partition_in, "Use this partition JSON instead of seeding");
  d->add_option("--out", dmo.out, "Clustering JSON to write")->envname("QM_OUT")->required();
  d->add_option("--report", dmo.report, "Run report JSON")->envname("QM_REPORT");
  d->add_option("--ledger", dmo.ledger, "Message ledger JSON")->envname("QM_LEDGER");
  d->add_flag("--ledger-vectors", dmo.ledger_vectors, "Include feature vectors in the ledger");
  d->add_option("--partition-out", dmo.partition_out, "Write the partition JSON");

  EvalOpts eo;
  auto* e = app.add_subcommand("eval", "Compare a clustering to ground truth, or measure split quality");
  e->add_option("--pred", eo.pred, "Predicted clustering (JSON or label file)")->required();
  e->add_option("--truth", eo.truth, "Reference clustering (JSON or label file)");
  e->add_option("--features", eo.features, "Feature file (split mode)");
  e->add_option("--partition", eo.partition, "Partition JSON (split mode)");
  e->add_option("--mode", eo.mode, "compare|split")->envname("QM_EVAL_MODE")->check(CLI::IsMember({"compare", "split"}))->capture_default_str();
  e->add_option("--out", eo.out, "Write the metric report here instead of stdout")->envname("QM_OUT");

  CompareOpts co;
  auto* c = app.add_subcommand("compare", "Sweep agent counts; write sweep.csv and plot data");
  c->add_option("input", co.input, "Feature file")->required();
  c->add_option("--agents-list", co.agents_list, "Agent counts to sweep")->envname("QM_AGENTS_LIST")->delimiter(',')->capture_default_str();
  c->add_option("--rho", co.rho, "Merge threshold factor")->envname("QM_RHO")->capture_default_str();
  c->add_option("--kernel", co.kernel, "Density kernel")->envname("QM_KERNEL")->check(CLI::IsMember(kernels))->capture_default_str();
  c->add_option("--seeding", co.seeding, "Voronoi seeding")->envname("QM_SEEDING")->check(CLI::IsMember(seedings))->capture_default_str();
  c->add_option("--seed", co.seed, "Seeding RNG seed")->envname("QM_SEED")->capture_default_str();
  c->add_option("--threads", co.threads, "Worker threads")->envname("QM_THREADS")->capture_default_str();
  c->add_option("--out-dir,--out", co.out_dir, "Output directory")->envname("QM_OUT")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    std::fprintf(stderr, "qm: error: %s\n", ex.what());
    return 1;
  }

  try {
    if (*g) run_generate(gen);
    if (*m) run_match(mo);
    if (*d) run_dmatch(dmo);
    if (*e) run_eval(eo);
    if (*c) run_compare(co);
  } catch (const Failure& f) {
    std::fprintf(stderr, "qm: error: %s\n", f.message.c_str());
    return f.code;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "qm: error: %s\n", ex.what());
    return 2;
  }
  return 0;
}
