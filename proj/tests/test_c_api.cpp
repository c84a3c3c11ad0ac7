#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "robust_bvs/robust_bvs.h"

namespace fs = std::filesystem;

TEST_CASE("version and error state") {
  CHECK(std::string(rbvs_version()) == "1.0.0");
  double v = 0.0;
  CHECK(rbvs_log_bf_recommended(3, 1, 2, 0.5, &v) == RBVS_ERR_CONFIG);
  CHECK(std::strlen(rbvs_last_error()) > 0);
  CHECK(rbvs_log_bf_recommended(20, 1, 2, 0.5, &v) == RBVS_OK);
  CHECK(std::string(rbvs_last_error()).empty());
  CHECK(std::isfinite(v));
}

TEST_CASE("general and recommended entry points agree") {
  double a = 0.0, b = 0.0;
  REQUIRE(rbvs_log_bf_recommended(30, 1, 3, 0.3, &a) == RBVS_OK);
  REQUIRE(rbvs_log_bf_general(0.5, 1.0, 0.25, 30, 1, 3, 0.3, &b) == RBVS_OK);
  CHECK(a == doctest::Approx(b).epsilon(1e-10));
  CHECK(rbvs_log_bf_general(0.5, 1.0, 0.001, 30, 1, 3, 0.3, &b) == RBVS_ERR_CONFIG);
  double s = 0.0;
  CHECK(rbvs_log_bf_sigma_known(0.5, 1.0, 0.25, 30, 3, 40.0, 30.0, 1.0, &s) == RBVS_OK);
}

TEST_CASE("config handle") {
  rbvs_config* c = nullptr;
  REQUIRE(rbvs_config_create(&c) == RBVS_OK);
  CHECK(rbvs_config_set(c, "format", "csv") == RBVS_OK);
  rbvs_format f;
  CHECK(rbvs_config_format(c, &f) == RBVS_OK);
  CHECK(f == RBVS_FORMAT_CSV);
  CHECK(rbvs_config_set(c, "nope", "1") == RBVS_ERR_CONFIG);
  CHECK(rbvs_config_load_file(c, "/nonexistent/file") == RBVS_ERR_CONFIG);
  CHECK(rbvs_config_set(nullptr, "a", "1") == RBVS_ERR_CONFIG);
  rbvs_config_destroy(c);
}

TEST_CASE("analysis from arrays") {
  const int n = 8;
  const double x1[n] = {1, -1, 1, -1, 1, -1, 1, -1};
  const double x2[n] = {1, 1, -1, -1, 1, 1, -1, -1};
  double y[n];
  double x[2 * n];
  for (int i = 0; i < n; ++i) {
    y[i] = 2.0 + 3.0 * x1[i] + 0.1 * ((i * 7) % 5 - 2);
    x[i] = x1[i];
    x[n + i] = x2[i];
  }
  const double ones[n] = {1, 1, 1, 1, 1, 1, 1, 1};
  rbvs_dataset* d = nullptr;
  REQUIRE(rbvs_dataset_from_arrays(n, y, 1, ones, 2, x, &d) == RBVS_OK);
  rbvs_config* c = nullptr;
  REQUIRE(rbvs_config_create(&c) == RBVS_OK);
  rbvs_config_set(c, "threads", "2");
  rbvs_report* r = nullptr;
  REQUIRE(rbvs_analyze(c, d, &r) == RBVS_OK);
  CHECK(rbvs_report_model_count(r) == 4);
  uint64_t mask = 99;
  double lbf = 0.0, prob = 0.0;
  CHECK(rbvs_report_model(r, 0, &mask, &lbf, &prob) == RBVS_OK);
  CHECK(mask == 1);
  CHECK(prob > 0.5);
  CHECK(rbvs_report_model(r, 4, &mask, nullptr, nullptr) == RBVS_ERR_CONFIG);
  double incl[2];
  int p = 0;
  CHECK(rbvs_report_inclusion(r, incl, 2, &p) == RBVS_OK);
  CHECK(p == 2);
  CHECK(incl[0] > 0.5);
  uint64_t hpm = 0, mpm = 0;
  CHECK(rbvs_report_hpm(r, &hpm) == RBVS_OK);
  CHECK(rbvs_report_mpm(r, &mpm) == RBVS_OK);
  CHECK(hpm == 1);
  char* json = nullptr;
  REQUIRE(rbvs_report_render(r, RBVS_FORMAT_JSON, &json) == RBVS_OK);
  CHECK(std::string(json).find("\"schema_version\"") != std::string::npos);
  rbvs_free_string(json);
  rbvs_report_destroy(r);
  rbvs_config_destroy(c);
  rbvs_dataset_destroy(d);
}

TEST_CASE("data errors map to RBVS_ERR_DATA") {
  const fs::path p = fs::temp_directory_path() / "rbvs_capi_bad.csv";
  std::ofstream(p) << "y,x\n1,2\n3,oops\n";
  rbvs_config* c = nullptr;
  REQUIRE(rbvs_config_create(&c) == RBVS_OK);
  rbvs_config_set(c, "data", p.string().c_str());
  rbvs_report* r = nullptr;
  CHECK(rbvs_analyze(c, nullptr, &r) == RBVS_ERR_DATA);
  CHECK(std::string(rbvs_last_error()).find("oops") != std::string::npos);
  rbvs_dataset* d = nullptr;
  CHECK(rbvs_dataset_load_csv(c, &d) == RBVS_ERR_DATA);
  const double y[2] = {1.0, NAN};
  CHECK(rbvs_dataset_from_arrays(2, y, 0, nullptr, 0, nullptr, &d) == RBVS_ERR_DATA);
  rbvs_config_destroy(c);
}
