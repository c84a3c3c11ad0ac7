#include "robust_bvs/robust_bvs.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "robust_bvs/analysis.hpp"
#include "robust_bvs/error.hpp"
#include "robust_bvs/validation.hpp"

struct rbvs_config {
  rbvs::AnalysisConfig config;
};

struct rbvs_dataset {
  rbvs::Dataset data;
};

struct rbvs_report {
  rbvs::AnalysisReport report;
};

namespace {

thread_local std::string last_error;

rbvs_status fail(rbvs_status status, const char* message) {
  last_error = message;
  return status;
}

// Runs f, mapping exceptions to status codes.
template <typename F>
rbvs_status guarded(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const rbvs::Error& e) {
    return fail(static_cast<rbvs_status>(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(RBVS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(RBVS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(RBVS_ERR_INTERNAL, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

#define RBVS_REQUIRE(cond, what) \
  if (!(cond)) return fail(RBVS_ERR_CONFIG, what)

}  // namespace

extern "C" {

const char* rbvs_version(void) { return rbvs::kVersion.data(); }

const char* rbvs_last_error(void) { return last_error.c_str(); }

void rbvs_free_string(char* s) { std::free(s); }

rbvs_status rbvs_config_create(rbvs_config** out) {
  RBVS_REQUIRE(out != nullptr, "null output pointer");
  return guarded([&] {
    *out = new rbvs_config();
    return RBVS_OK;
  });
}

void rbvs_config_destroy(rbvs_config* config) { delete config; }

rbvs_status rbvs_config_set(rbvs_config* config, const char* key, const char* value) {
  RBVS_REQUIRE(config != nullptr && key != nullptr && value != nullptr, "null argument");
  return guarded([&] {
    rbvs::apply_config_entry(config->config, key, value);
    return RBVS_OK;
  });
}

rbvs_status rbvs_config_load_file(rbvs_config* config, const char* path) {
  RBVS_REQUIRE(config != nullptr && path != nullptr, "null argument");
  return guarded([&] {
    rbvs::load_config_file(config->config, path);
    return RBVS_OK;
  });
}

rbvs_status rbvs_config_format(const rbvs_config* config, rbvs_format* out) {
  RBVS_REQUIRE(config != nullptr && out != nullptr, "null argument");
  *out = config->config.format == rbvs::OutputFormat::json ? RBVS_FORMAT_JSON : RBVS_FORMAT_CSV;
  return RBVS_OK;
}

const char* rbvs_config_out_path(const rbvs_config* config) {
  return config == nullptr ? "" : config->config.out_path.c_str();
}

rbvs_status rbvs_dataset_load_csv(const rbvs_config* config, rbvs_dataset** out) {
  RBVS_REQUIRE(config != nullptr && out != nullptr, "null argument");
  return guarded([&] {
    auto d = std::make_unique<rbvs_dataset>();
    d->data = rbvs::load_csv(config->config);
    *out = d.release();
    return RBVS_OK;
  });
}

rbvs_status rbvs_dataset_from_arrays(int n, const double* y, int k0, const double* x0, int p, const double* x,
                                     rbvs_dataset** out) {
  RBVS_REQUIRE(out != nullptr && y != nullptr, "null argument");
  RBVS_REQUIRE(n >= 1 && k0 >= 0 && p >= 0, "dimensions must be non-negative and n >= 1");
  RBVS_REQUIRE(k0 == 0 || x0 != nullptr, "x0 is null but k0 > 0");
  RBVS_REQUIRE(p == 0 || x != nullptr, "x is null but p > 0");
  return guarded([&] {
    auto d = std::make_unique<rbvs_dataset>();
    d->data.y = Eigen::Map<const Eigen::VectorXd>(y, n);
    d->data.x0 = k0 > 0 ? Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(x0, n, k0)) : Eigen::MatrixXd(n, 0);
    d->data.x = p > 0 ? Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(x, n, p)) : Eigen::MatrixXd(n, 0);
    d->data.validate();
    *out = d.release();
    return RBVS_OK;
  });
}

void rbvs_dataset_destroy(rbvs_dataset* data) { delete data; }

rbvs_status rbvs_analyze(const rbvs_config* config, const rbvs_dataset* data, rbvs_report** out) {
  RBVS_REQUIRE(config != nullptr && out != nullptr, "null argument");
  return guarded([&] {
    auto r = std::make_unique<rbvs_report>();
    r->report = data != nullptr ? rbvs::run_analyze(config->config, data->data) : rbvs::run_analyze(config->config);
    *out = r.release();
    return RBVS_OK;
  });
}

void rbvs_report_destroy(rbvs_report* report) { delete report; }

rbvs_status rbvs_report_render(const rbvs_report* report, rbvs_format format, char** out) {
  RBVS_REQUIRE(report != nullptr && out != nullptr, "null argument");
  RBVS_REQUIRE(format == RBVS_FORMAT_JSON || format == RBVS_FORMAT_CSV, "unknown format");
  return guarded([&] {
    const auto f = format == RBVS_FORMAT_JSON ? rbvs::OutputFormat::json : rbvs::OutputFormat::csv;
    *out = copy_string(rbvs::render_report(report->report, f));
    return RBVS_OK;
  });
}

size_t rbvs_report_model_count(const rbvs_report* report) {
  return report == nullptr ? 0 : report->report.rows.size();
}

rbvs_status rbvs_report_model(const rbvs_report* report, size_t i, uint64_t* mask, double* log_bf,
                              double* probability) {
  RBVS_REQUIRE(report != nullptr, "null report");
  RBVS_REQUIRE(i < report->report.rows.size(), "model index out of range");
  const auto& row = report->report.rows[i];
  if (mask != nullptr) *mask = row.model.mask;
  if (log_bf != nullptr) *log_bf = row.log_bf;
  if (probability != nullptr) *probability = row.probability;
  return RBVS_OK;
}

rbvs_status rbvs_report_inclusion(const rbvs_report* report, double* out, size_t capacity, int* p_out) {
  RBVS_REQUIRE(report != nullptr, "null report");
  const auto& incl = report->report.summary.inclusion_probs;
  if (p_out != nullptr) *p_out = static_cast<int>(incl.size());
  RBVS_REQUIRE(out != nullptr || incl.empty(), "null output buffer");
  RBVS_REQUIRE(capacity >= incl.size(), "output buffer too small");
  for (size_t j = 0; j < incl.size(); ++j) out[j] = incl[j];
  return RBVS_OK;
}

rbvs_status rbvs_report_hpm(const rbvs_report* report, uint64_t* mask) {
  RBVS_REQUIRE(report != nullptr && mask != nullptr, "null argument");
  *mask = report->report.summary.hpm.mask;
  return RBVS_OK;
}

rbvs_status rbvs_report_mpm(const rbvs_report* report, uint64_t* mask) {
  RBVS_REQUIRE(report != nullptr && mask != nullptr, "null argument");
  *mask = report->report.summary.mpm.mask;
  return RBVS_OK;
}

rbvs_status rbvs_log_bf_recommended(int n, int k0, int ki, double q, double* out) {
  RBVS_REQUIRE(out != nullptr, "null output pointer");
  return guarded([&] {
    *out = rbvs::log_bf_recommended(n, k0, ki, q).log_value;
    return RBVS_OK;
  });
}

rbvs_status rbvs_log_bf_general(double a, double b, double rho, int n, int k0, int ki, double q, double* out) {
  RBVS_REQUIRE(out != nullptr, "null output pointer");
  return guarded([&] {
    *out = rbvs::log_bf_general(rbvs::MixingDensityParams{a, b, rho, n}, k0, ki, q).log_value;
    return RBVS_OK;
  });
}

rbvs_status rbvs_log_bf_sigma_known(double a, double b, double rho, int n, int ki, double sse0, double ssei,
                                    double sigma, double* out) {
  RBVS_REQUIRE(out != nullptr, "null output pointer");
  return guarded([&] {
    *out = rbvs::log_bf_sigma_known(rbvs::MixingDensityParams{a, b, rho, n}, ki, sse0, ssei, sigma).log_value;
    return RBVS_OK;
  });
}

rbvs_status rbvs_validate(rbvs_tier tier, const char* tsv_path, char** text) {
  RBVS_REQUIRE(tier == RBVS_TIER_FAST || tier == RBVS_TIER_FULL, "unknown tier");
  return guarded([&] {
    rbvs::ValidationOptions options;
    options.tier = tier == RBVS_TIER_FULL ? rbvs::ValidationTier::full : rbvs::ValidationTier::fast;
    options.threads = rbvs::resolve_threads(0);
    if (tsv_path != nullptr) options.consistency_tsv_path = tsv_path;
    const rbvs::ValidationReport report = rbvs::run_validate(options);
    if (text != nullptr) *text = copy_string(report.text());
    if (report.all_passed()) return RBVS_OK;
    last_error = "one or more properties failed";
    return RBVS_ERR_VALIDATION;
  });
}

}  // extern "C"
