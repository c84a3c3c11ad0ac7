// robust-bvs command line front end. Talks to the library only through the C
// interface.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "robust_bvs/robust_bvs.h"

namespace {

constexpr int kExitConfig = RBVS_ERR_CONFIG;

struct Handles {
  rbvs_config* config = nullptr;
  rbvs_report* report = nullptr;
  ~Handles() {
    rbvs_report_destroy(report);
    rbvs_config_destroy(config);
  }
};

int report_error(rbvs_status status, const std::string& context) {
  std::cerr << "robust-bvs: " << context << ": " << rbvs_last_error() << "\n";
  return static_cast<int>(status);
}

int write_output(const std::string& path, const char* text) {
  if (path.empty()) {
    std::fputs(text, stdout);
    return std::fflush(stdout) == 0 ? 0 : kExitConfig;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "robust-bvs: cannot write '" << path << "'\n";
    return kExitConfig;
  }
  return 0;
}

// Flag name -> config key, for flags taking a value.
const std::vector<std::pair<std::string, std::string>> kAnalyzeFlags = {
    {"data", "data"},           {"response", "response"},   {"fixed", "fixed"},
    {"candidates", "candidates"}, {"null-model", "null_model"}, {"prior", "prior"},
    {"a", "a"},                 {"b", "b"},                 {"rho", "rho"},
    {"sigma", "sigma"},         {"max-dim", "max_dim"},     {"search", "search"},
    {"iterations", "iterations"}, {"chains", "chains"},     {"seed", "seed"},
    {"rel-tol", "rel_tol"},     {"format", "format"},       {"threads", "threads"},
    {"report-limit", "report_limit"}, {"out", "out"},
};

int run_analyze(const std::string& config_path, const std::vector<std::pair<std::string, std::string>>& settings) {
  Handles h;
  rbvs_status st = rbvs_config_create(&h.config);
  if (st != RBVS_OK) return report_error(st, "config");
  if (!config_path.empty()) {
    st = rbvs_config_load_file(h.config, config_path.c_str());
    if (st != RBVS_OK) return report_error(st, "config");
  }
  // Flags are applied after the file so they win.
  for (const auto& [key, value] : settings) {
    st = rbvs_config_set(h.config, key.c_str(), value.c_str());
    if (st != RBVS_OK) return report_error(st, "--" + key);
  }
  st = rbvs_analyze(h.config, nullptr, &h.report);
  if (st != RBVS_OK) return report_error(st, "analyze");
  rbvs_format format;
  rbvs_config_format(h.config, &format);
  char* text = nullptr;
  st = rbvs_report_render(h.report, format, &text);
  if (st != RBVS_OK) return report_error(st, "render");
  const int rc = write_output(rbvs_config_out_path(h.config), text);
  rbvs_free_string(text);
  if (rc == 0) std::cerr << "robust-bvs: " << rbvs_report_model_count(h.report) << " models evaluated\n";
  return rc;
}

int run_validate(const std::string& tier, const std::string& tsv) {
  const rbvs_tier t = tier == "full" ? RBVS_TIER_FULL : RBVS_TIER_FAST;
  char* text = nullptr;
  const rbvs_status st = rbvs_validate(t, tsv.empty() ? nullptr : tsv.c_str(), &text);
  if (text != nullptr) {
    std::fputs(text, stdout);
    std::fflush(stdout);
    rbvs_free_string(text);
  }
  if (st != RBVS_OK) return report_error(st, "validate");
  return 0;
}

int run_bf(int n, int k0, int ki, double q, std::optional<double> a, std::optional<double> b,
           std::optional<double> rho) {
  double value = 0.0;
  rbvs_status st;
  if (!a && !b && !rho) {
    st = rbvs_log_bf_recommended(n, k0, ki, q, &value);
  } else {
    const double aa = a.value_or(0.5);
    const double bb = b.value_or(1.0);
    const double rr = rho.value_or(1.0 / (k0 + ki));
    st = rbvs_log_bf_general(aa, bb, rr, n, k0, ki, q, &value);
  }
  if (st != RBVS_OK) return report_error(st, "bf");
  std::printf("%.17g\n", value);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian variable selection with robust g-prior mixtures"};
  app.set_version_flag("--version", std::string(rbvs_version()));
  app.require_subcommand(1);

  auto* analyze = app.add_subcommand("analyze", "score models and write a report");
  std::string config_path;
  analyze->add_option("-c,--config", config_path, "key = value settings file (flags override it)");
  std::vector<std::string> flag_values(kAnalyzeFlags.size());
  std::vector<CLI::Option*> flag_options;
  for (std::size_t i = 0; i < kAnalyzeFlags.size(); ++i)
    flag_options.push_back(analyze->add_option("--" + kAnalyzeFlags[i].first, flag_values[i]));
  std::vector<std::string> extra;
  analyze->add_option("--set", extra, "extra key=value setting (repeatable)");

  auto* validate = app.add_subcommand("validate", "run the property suite");
  std::string tier = "fast";
  std::string tsv;
  validate->add_option("--tier", tier, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  validate->add_option("--tsv", tsv, "consistency table path (full tier)");

  auto* bf = app.add_subcommand("bf", "log Bayes factor for one model");
  int n = 0, k0 = 1, ki = 1;
  double q = 1.0;
  std::optional<double> a, b, rho;
  bf->add_option("-n", n, "sample size")->required();
  bf->add_option("--k0", k0, "fixed columns");
  bf->add_option("--ki", ki, "candidate columns in the model");
  bf->add_option("-q", q, "SSE_i / SSE_0")->required();
  bf->add_option("--a", a);
  bf->add_option("--b", b);
  bf->add_option("--rho", rho);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (*analyze) {
    std::vector<std::pair<std::string, std::string>> settings;
    for (const auto& s : extra) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        std::cerr << "robust-bvs: --set expects key=value, got '" << s << "'\n";
        return kExitConfig;
      }
      settings.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    for (std::size_t i = 0; i < kAnalyzeFlags.size(); ++i)
      if (flag_options[i]->count() > 0) settings.emplace_back(kAnalyzeFlags[i].second, flag_values[i]);
    return run_analyze(config_path, settings);
  }
  if (*validate) return run_validate(tier, tsv);
  return run_bf(n, k0, ki, q, a, b, rho);
}
