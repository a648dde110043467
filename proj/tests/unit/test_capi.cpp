// Exercises the shared library through its C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "quickmatch/quickmatch.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  qm_string_free(s);
  return out;
}

struct Blobs {
  qm_features* fs = nullptr;
  qm_clustering* truth = nullptr;
  Blobs() {
    qm_synth_config cfg;
    qm_synth_config_default(&cfg);
    REQUIRE(qm_synth_generate(&cfg, &fs, &truth) == QM_OK);
  }
  ~Blobs() {
    qm_features_free(fs);
    qm_clustering_free(truth);
  }
};

}  // namespace

TEST_CASE("version and names") {
  CHECK(std::strlen(qm_version()) > 0);
  qm_kernel k;
  CHECK(qm_kernel_from_name("quadratic", &k) == QM_OK);
  CHECK(k == QM_KERNEL_QUADRATIC);
  CHECK(qm_kernel_from_name("gaussian-squared", &k) == QM_OK);
  CHECK(k == QM_KERNEL_GAUSSIAN_SQUARED);
  CHECK(qm_kernel_from_name("bogus", &k) == QM_ERR_INPUT);
  CHECK(std::strstr(qm_last_error(), "bogus") != nullptr);
  qm_seeding s;
  CHECK(qm_seeding_from_name("random", &s) == QM_OK);
  CHECK(s == QM_SEEDING_RANDOM);
  CHECK(qm_kernel_from_name(nullptr, &k) == QM_ERR_INPUT);
}

TEST_CASE("features: create, parse, accessors, errors") {
  const int64_t images[] = {0, 0, 1};
  const int64_t indices[] = {0, 1, 0};
  const double values[] = {0, 0, 3, 4, 1, 1};
  qm_features* fs = nullptr;
  REQUIRE(qm_features_create(2, 3, images, indices, values, &fs) == QM_OK);
  CHECK(qm_features_count(fs) == 3);
  CHECK(qm_features_dim(fs) == 2);
  CHECK(qm_features_image_count(fs) == 2);
  int64_t im = -1, ix = -1;
  CHECK(qm_features_id(fs, 2, &im, &ix) == QM_OK);
  CHECK(im == 1);
  CHECK(ix == 0);
  CHECK(qm_features_id(fs, 3, &im, &ix) == QM_ERR_INPUT);
  CHECK(qm_features_vector(fs, 1)[1] == 4.0);
  double d = 0.0;
  CHECK(qm_distance(qm_features_vector(fs, 0), qm_features_vector(fs, 1), 2, &d) == QM_OK);
  CHECK(d == 5.0);
  qm_features_free(fs);

  const int64_t dup_images[] = {0, 0};
  const int64_t dup_indices[] = {1, 1};
  qm_features* bad = nullptr;
  CHECK(qm_features_create(1, 2, dup_images, dup_indices, values, &bad) == QM_ERR_INPUT);
  CHECK(bad == nullptr);

  CHECK(qm_features_parse("0 0 1 2\n0 1 1\n", &bad) == QM_ERR_PARSE);
  CHECK(std::strstr(qm_last_error(), ":2:") != nullptr);
  CHECK(qm_features_load("/nonexistent/file.txt", &bad) == QM_ERR_IO);
  CHECK(qm_features_parse(nullptr, &bad) == QM_ERR_INPUT);
  qm_features_free(nullptr);
}

TEST_CASE("match and clustering round trip") {
  Blobs b;
  qm_match_params mp;
  qm_match_params_default(&mp);
  CHECK(mp.rho == 1.1);
  CHECK(mp.kernel == QM_KERNEL_GAUSSIAN);
  qm_clustering* c = nullptr;
  REQUIRE(qm_match(b.fs, &mp, &c) == QM_OK);
  CHECK(qm_clustering_cluster_count(c) == 25);
  CHECK(qm_clustering_feature_count(c) == 250);
  CHECK(qm_clustering_validate(c, b.fs) == QM_OK);

  char* json = nullptr;
  REQUIRE(qm_eval_compare(b.truth, c, &json) == QM_OK);
  CHECK(take(json).find("\"exact_equal\": true") != std::string::npos);

  const char* path = "capi_clustering_test.json";
  REQUIRE(qm_clustering_save(c, b.fs, path) == QM_OK);
  qm_clustering* back = nullptr;
  REQUIRE(qm_clustering_load(path, &back) == QM_OK);
  char* a_json = nullptr;
  char* b_json = nullptr;
  qm_clustering_to_json(c, &a_json);
  qm_clustering_to_json(back, &b_json);
  CHECK(take(a_json) == take(b_json));
  std::remove(path);

  size_t labels[250];
  CHECK(qm_clustering_labels(c, b.fs, labels) == QM_OK);
  CHECK(labels[0] == 0);

  REQUIRE(qm_match_report(b.fs, &mp, c, 0.25, &json) == QM_OK);
  const std::string report = take(json);
  uint64_t h1 = 0, h2 = 0;
  CHECK(qm_report_digest(report.c_str(), &h1) == QM_OK);
  char* json2 = nullptr;
  qm_match_report(b.fs, &mp, c, 9.0, &json2);
  CHECK(qm_report_digest(json2, &h2) == QM_OK);
  qm_string_free(json2);
  CHECK(h1 == h2);
  CHECK(qm_report_digest("{not json", &h1) == QM_ERR_PARSE);

  mp.rho = -1.0;
  qm_clustering* none = nullptr;
  CHECK(qm_match(b.fs, &mp, &none) == QM_ERR_INPUT);
  qm_clustering_free(back);
  qm_clustering_free(c);
}

TEST_CASE("validation rejects a clustering against the wrong source") {
  Blobs b;
  qm_features* small = nullptr;
  REQUIRE(qm_features_parse("0 0 1\n1 0 2\n", &small) == QM_OK);
  CHECK(qm_clustering_validate(b.truth, small) == QM_ERR_VALIDATION);
  qm_features_free(small);
}

TEST_CASE("partition and boundary distance") {
  qm_features* fs = nullptr;
  REQUIRE(qm_features_parse("0 0 0.5\n1 0 1.5\n", &fs) == QM_OK);
  const double seeds[] = {0.0, 2.0};
  qm_partition* p = nullptr;
  REQUIRE(qm_partition_from_seeds(fs, 2, seeds, &p) == QM_OK);
  CHECK(qm_partition_agents(p) == 2);
  CHECK(qm_partition_owner(p, 0) == 0);
  CHECK(qm_partition_owner(p, 1) == 1);
  CHECK(qm_partition_seed(p, 1)[0] == 2.0);
  CHECK(qm_partition_seed(p, 2) == nullptr);
  const double x = 0.5;
  double d = 0.0, xm = 0.0;
  CHECK(qm_boundary_distance(p, &x, 1, 0, 1, &d, &xm) == QM_OK);
  CHECK(d == doctest::Approx(0.5));
  CHECK(xm == doctest::Approx(1.0));
  CHECK(qm_boundary_distance(p, &x, 1, 0, 0, &d, nullptr) == QM_ERR_INPUT);
  qm_partition_free(p);

  const double same[] = {1.0, 1.0};
  CHECK(qm_partition_from_seeds(fs, 2, same, &p) == QM_ERR_INPUT);
  CHECK(qm_partition_kmeans(fs, 3, 1, &p) == QM_ERR_INPUT);
  REQUIRE(qm_partition_random(fs, 2, 7, &p) == QM_OK);
  const char* path = "capi_partition_test.json";
  REQUIRE(qm_partition_save(p, fs, path) == QM_OK);
  qm_partition* back = nullptr;
  REQUIRE(qm_partition_load(path, fs, &back) == QM_OK);
  CHECK(qm_partition_seed(back, 0)[0] == qm_partition_seed(p, 0)[0]);
  std::remove(path);
  qm_partition_free(back);
  qm_partition_free(p);
  qm_features_free(fs);
}

TEST_CASE("distributed run") {
  Blobs b;
  qm_dmatch_params dp;
  qm_dmatch_params_default(&dp);
  CHECK(dp.agents == 4);
  CHECK(dp.kernel == QM_KERNEL_QUADRATIC);
  qm_drun* run = nullptr;
  REQUIRE(qm_dmatch(b.fs, &dp, &run) == QM_OK);
  CHECK(qm_drun_check_ledger(run) == QM_OK);

  qm_clustering* c = nullptr;
  REQUIRE(qm_drun_clustering(run, &c) == QM_OK);
  char* json = nullptr;
  qm_eval_compare(b.truth, c, &json);
  CHECK(take(json).find("\"exact_equal\": true") != std::string::npos);

  qm_match_params mp{dp.rho, dp.kernel};
  qm_clustering* central = nullptr;
  REQUIRE(qm_match(b.fs, &mp, &central) == QM_OK);
  REQUIRE(qm_drun_report(run, central, &json) == QM_OK);
  CHECK(take(json).find("\"equivalent_to_centralized\": true") != std::string::npos);
  REQUIRE(qm_drun_table_row(run, central, &json) == QM_OK);
  CHECK(take(json).rfind("4,", 0) == 0);
  CHECK(std::strlen(qm_table_header()) > 0);
  REQUIRE(qm_drun_ledger(run, 0, &json) == QM_OK);
  CHECK(take(json).find("\"summary\"") != std::string::npos);

  qm_partition* p = nullptr;
  REQUIRE(qm_drun_partition(run, &p) == QM_OK);
  for (size_t r = 0; r < 250; ++r) {
    CHECK(qm_drun_owner(run, r, 0) == qm_partition_owner(p, r));
    CHECK(qm_drun_owner(run, r, 1) <= qm_drun_owner(run, r, 0));
  }

  // Same partition, more threads: same ledger.
  dp.threads = 4;
  qm_drun* again = nullptr;
  REQUIRE(qm_dmatch_with_partition(b.fs, p, &dp, &again) == QM_OK);
  CHECK(qm_drun_ledger_hash(again) == qm_drun_ledger_hash(run));
  qm_drun_free(again);

  dp.agents = 0;
  qm_drun* bad = nullptr;
  CHECK(qm_dmatch(b.fs, &dp, &bad) == QM_ERR_INPUT);
  CHECK(bad == nullptr);

  qm_partition_free(p);
  qm_clustering_free(central);
  qm_clustering_free(c);
  qm_drun_free(run);
}

TEST_CASE("split evaluation") {
  Blobs b;
  qm_partition* p = nullptr;
  REQUIRE(qm_partition_kmeans(b.fs, 4, 1, &p) == QM_OK);
  char* json = nullptr;
  REQUIRE(qm_eval_split(b.truth, b.fs, p, &json) == QM_OK);
  CHECK(take(json).find("\"p_contested\"") != std::string::npos);
  qm_partition_free(p);
}
