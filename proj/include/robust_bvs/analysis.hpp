#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "robust_bvs/design_linalg.hpp"
#include "robust_bvs/posterior.hpp"
#include "robust_bvs/robust_bf.hpp"

namespace rbvs {

inline constexpr std::string_view kVersion = "1.0.0";
/// Bumped whenever a field of the JSON report changes meaning or is removed.
inline constexpr int kReportSchemaVersion = 1;

enum class SearchMode { enumerate, mc3 };
enum class OutputFormat { json, csv };
/// What the null model contains when no fixed columns are named.
enum class NullModel { intercept, none };

struct AnalysisConfig {
  std::string data_path;
  /// Column name, or "#j" for the j-th column (1-based).
  std::string response_column;
  /// Empty: synthesize an intercept (or nothing, with null_model = none).
  std::vector<std::string> fixed_columns;
  /// Empty: every column that is neither the response nor fixed.
  std::vector<std::string> candidate_columns;
  NullModel null_model = NullModel::intercept;
  Hyperparameters hp;
  std::optional<int> max_dim;
  SearchMode search = SearchMode::enumerate;
  Mc3Options mc3{};
  double rel_tol = 1e-10;
  OutputFormat format = OutputFormat::json;
  /// 0: ROBUST_BVS_THREADS, else the hardware concurrency.
  int threads = 0;
  /// Rows of the model table written to the report.
  std::size_t report_limit = 1000;
  std::string out_path;
};

/// Applies one `key = value` setting; the keys are those of the config file
/// (see README). Throws ConfigError for unknown keys or bad values.
void apply_config_entry(AnalysisConfig& config, std::string_view key, std::string_view value);

/// Reads a flat `key = value` file ('#' starts a comment) into `config`.
void load_config_file(AnalysisConfig& config, const std::string& path);

/// Checks the settings that do not depend on the data.
void validate_config(const AnalysisConfig& config);

/// Streams a comma-separated file with a header row into a Dataset. Missing
/// or non-numeric cells raise DataError naming the row and column.
Dataset load_csv(const AnalysisConfig& config);

/// Worker count after applying the environment override.
int resolve_threads(int requested);

struct ModelRow {
  ModelId model;
  std::string names;
  int k = 0;
  double sse = 0.0;
  double q = 0.0;
  double log_bf = 0.0;
  BayesFactorRoute route = BayesFactorRoute::trivial;
  double log_prior_odds = 0.0;
  double probability = 0.0;
};

struct SkippedModel {
  ModelId model;
  std::string reason;
};

struct AnalysisReport {
  AnalysisConfig config;
  int n = 0;
  int k0 = 0;
  int p = 0;
  std::vector<std::string> fixed_names;
  std::vector<std::string> candidate_names;
  double null_sse = 0.0;
  /// All evaluated models, by probability descending then mask ascending.
  std::vector<ModelRow> rows;
  std::vector<SkippedModel> skipped;
  PosteriorSummary summary;
  /// Prior probability mass of the evaluated models (1 for full enumeration).
  double evaluated_fraction = 1.0;
  std::uint64_t models_evaluated = 0;
  std::int64_t mc3_accepted = 0;
  std::int64_t mc3_skipped_proposals = 0;
};

/// Scores every model (or runs MC3), forms posterior probabilities and
/// summaries. Deterministic for any thread count.
AnalysisReport run_analyze(const AnalysisConfig& config, const Dataset& data);
/// Loads the CSV named in the config first.
AnalysisReport run_analyze(const AnalysisConfig& config);

/// JSON (schema in docs/report_schema.md) or CSV model table.
std::string render_report(const AnalysisReport& report, OutputFormat format);

std::string_view to_string(SearchMode mode);
std::string_view to_string(OutputFormat format);

}  // namespace rbvs
