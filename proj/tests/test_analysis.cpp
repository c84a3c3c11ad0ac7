#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "robust_bvs/analysis.hpp"
#include "robust_bvs/error.hpp"

using namespace rbvs;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("rbvs_test_" + name);
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

AnalysisConfig config_for(const fs::path& p) {
  AnalysisConfig c;
  c.data_path = p.string();
  c.threads = 1;
  return c;
}

// y strongly driven by x1; x2 orthogonal to x1 and to the intercept.
std::string orthogonal_csv() {
  std::string s = "y,x1,x2\n";
  const double x1[] = {1, -1, 1, -1, 1, -1, 1, -1};
  const double x2[] = {1, 1, -1, -1, 1, 1, -1, -1};
  const double e[] = {0.1, -0.2, 0.05, 0.15, -0.1, 0.2, -0.05, -0.15};
  for (int i = 0; i < 8; ++i) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.6f,%g,%g\n", 2.0 + 3.0 * x1[i] + e[i], x1[i], x2[i]);
    s += buf;
  }
  return s;
}

}  // namespace

TEST_CASE("smallest CSV: 3 rows, one candidate") {
  const auto p = temp_file("small.csv", "y,x1\n1,2\n2,3.5\n4,1\n");
  const Dataset d = load_csv(config_for(p));
  CHECK(d.n() == 3);
  CHECK(d.p() == 1);
  CHECK(d.k0() == 1);
  CHECK(d.x0.col(0).isOnes());
  CHECK(d.fixed_names.front() == "(intercept)");
}

TEST_CASE("CSV parsing: quotes, BOM, CRLF, column selection") {
  const auto p = temp_file("quoted.csv", "\xEF\xBB\xBF\"resp\",\"a,b\",\"say \"\"hi\"\"\",z\r\n1,2,3,4\r\n5,6,7,8\r\n");
  AnalysisConfig c = config_for(p);
  c.response_column = "#1";
  c.fixed_columns = {"z"};
  const Dataset d = load_csv(c);
  CHECK(d.candidate_names == std::vector<std::string>{"a,b", "say \"hi\""});
  CHECK(d.fixed_names == std::vector<std::string>{"z"});
  CHECK(d.x0(1, 0) == 8.0);
  CHECK(d.y(1) == 5.0);
}

TEST_CASE("CSV errors name row and column") {
  const auto p = temp_file("bad.csv", "y,x1\n1,2\n3,abc\n");
  try {
    load_csv(config_for(p));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("x1") != std::string::npos);
  }
  CHECK_THROWS_AS(load_csv(config_for(temp_file("na.csv", "y,x1\n1,NA\n2,3\n"))), DataError);
  CHECK_THROWS_AS(load_csv(config_for(temp_file("short.csv", "y,x1\n1\n"))), DataError);
  CHECK_THROWS_AS(load_csv(config_for(temp_file("dup.csv", "y,y\n1,2\n"))), DataError);
}

TEST_CASE("header mismatch with config is a named-column error") {
  AnalysisConfig c = config_for(temp_file("hdr.csv", "y,x1\n1,2\n"));
  c.candidate_columns = {"x9"};
  try {
    load_csv(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("x9") != std::string::npos);
  }
  c.candidate_columns = {"y"};
  CHECK_THROWS_AS(load_csv(c), ConfigError);
}

TEST_CASE("config file and entries") {
  const auto p = temp_file("cfg.txt",
                           "# comment\n"
                           "data = d.csv\n"
                           "prior = hyper-g   # trailing\n"
                           "candidates = a, b ,c\n"
                           "search = mc3\n"
                           "iterations = 500\n"
                           "sigma = 2.5\n"
                           "format = csv\n");
  AnalysisConfig c;
  load_config_file(c, p.string());
  CHECK(c.data_path == "d.csv");
  CHECK(c.hp.rule == RhoRule::hyper_g);
  CHECK(c.candidate_columns == std::vector<std::string>{"a", "b", "c"});
  CHECK(c.search == SearchMode::mc3);
  CHECK(c.mc3.iterations == 500);
  CHECK(c.hp.sigma_known.value() == 2.5);
  CHECK(c.format == OutputFormat::csv);
  apply_config_entry(c, "rho", "0.3");
  CHECK(c.hp.rule == RhoRule::constant);
  CHECK_THROWS_AS(apply_config_entry(c, "colour", "red"), ConfigError);
  CHECK_THROWS_AS(apply_config_entry(c, "a", "half"), ConfigError);
  try {
    load_config_file(c, temp_file("cfg_bad.txt", "a = 1\nnonsense\n").string());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
}

TEST_CASE("validate_config") {
  AnalysisConfig c;
  CHECK_NOTHROW(validate_config(c));
  c.hp.a = -1.0;
  CHECK_THROWS_AS(validate_config(c), ConfigError);
}

TEST_CASE("p = 0 gives a single-row report with probability one") {
  const auto p = temp_file("null.csv", "y\n1\n2\n4\n");
  const AnalysisReport r = run_analyze(config_for(p));
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].probability == 1.0);
  CHECK(r.rows[0].model.mask == 0);
  CHECK(r.evaluated_fraction == 1.0);
}

TEST_CASE("orthogonal design with one strong predictor") {
  const AnalysisReport r = run_analyze(config_for(temp_file("orth.csv", orthogonal_csv())));
  CHECK(r.summary.hpm.mask == 0b01);
  CHECK(r.rows.front().model.mask == 0b01);
  CHECK(r.rows.size() == 4);
  for (std::size_t i = 1; i < r.rows.size(); ++i) CHECK(r.rows[i - 1].probability >= r.rows[i].probability);
}

TEST_CASE("JSON report structure") {
  AnalysisConfig c = config_for(temp_file("orth2.csv", orthogonal_csv()));
  const AnalysisReport r = run_analyze(c);
  const auto j = nlohmann::json::parse(render_report(r, OutputFormat::json));
  CHECK(j["schema_version"] == kReportSchemaVersion);
  CHECK(j["tool"]["version"] == std::string(kVersion));
  CHECK(j["summary"]["evaluated_fraction"] == 1.0);
  CHECK(j["models"].size() == 4);
  double total = 0.0;
  for (const auto& m : j["models"]) {
    const double pr = m["posterior_prob"];
    CHECK(pr >= 0.0);
    CHECK(pr <= 1.0);
    total += pr;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& ip : j["inclusion_probabilities"]) {
    CHECK(ip["probability"].get<double>() >= 0.0);
    CHECK(ip["probability"].get<double>() <= 1.0);
  }
  CHECK(j["plot_data"]["inclusion_tsv"].get<std::string>().rfind("covariate\t", 0) == 0);
  CHECK(!j["plot_data"]["top_models_tsv"].get<std::string>().empty());
}

TEST_CASE("CSV report header") {
  const AnalysisReport r = run_analyze(config_for(temp_file("orth3.csv", orthogonal_csv())));
  const std::string csv = render_report(r, OutputFormat::csv);
  CHECK(csv.rfind("rank,mask,covariates,k,sse,q,log_bf,bf_route,log_prior_odds,posterior_prob\n", 0) == 0);
}

TEST_CASE("rank-deficient models are skipped, not fatal") {
  const auto p = temp_file("collinear.csv", "y,a,b,c\n1,1,2,3\n2,2,1,3\n3,0,1,1\n5,3,3,6\n4,1,1,2\n7,2,5,7\n");
  const AnalysisReport r = run_analyze(config_for(p));
  CHECK(!r.skipped.empty());
  CHECK(r.skipped.front().model.mask == 0b111);
  CHECK(r.evaluated_fraction < 1.0);
}

TEST_CASE("identical runs give byte-identical JSON") {
  AnalysisConfig c = config_for(temp_file("orth4.csv", orthogonal_csv()));
  const std::string a = render_report(run_analyze(c), OutputFormat::json);
  c.threads = 4;
  const std::string b = render_report(run_analyze(c), OutputFormat::json);
  CHECK(a == b);
}

TEST_CASE("MC3 mode covers the small space") {
  AnalysisConfig c = config_for(temp_file("orth5.csv", orthogonal_csv()));
  c.search = SearchMode::mc3;
  c.mc3.iterations = 2000;
  const AnalysisReport r = run_analyze(c);
  CHECK(r.summary.hpm.mask == 0b01);
  // {x2} alone is never reached: leaving {x1} is always rejected
  CHECK(r.evaluated_fraction > 0.5);
  CHECK(r.evaluated_fraction <= 1.0);
}

TEST_CASE("10^5 x 20 CSV loads") {
  const fs::path p = fs::temp_directory_path() / "rbvs_test_big.csv";
  {
    std::ofstream out(p);
    out << "y";
    for (int j = 1; j <= 19; ++j) out << ",x" << j;
    out << "\n";
    for (int i = 0; i < 100000; ++i) {
      out << (i % 17) * 0.25;
      for (int j = 1; j <= 19; ++j) out << "," << ((i * 31 + j * 7) % 101) * 0.01;
      out << "\n";
    }
  }
  const auto start = std::chrono::steady_clock::now();
  const Dataset d = load_csv(config_for(p));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(d.n() == 100000);
  CHECK(d.p() == 19);
  CHECK(seconds < 10.0);
  fs::remove(p);
}

TEST_CASE("ROBUST_BVS_THREADS") {
  CHECK(resolve_threads(3) == 3);
  ::setenv("ROBUST_BVS_THREADS", "5", 1);
  CHECK(resolve_threads(0) == 5);
  ::setenv("ROBUST_BVS_THREADS", "zero", 1);
  CHECK_THROWS_AS(resolve_threads(0), ConfigError);
  ::unsetenv("ROBUST_BVS_THREADS");
  CHECK(resolve_threads(0) >= 1);
}
