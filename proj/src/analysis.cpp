#include "robust_bvs/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "json.hpp"
#include "robust_bvs/error.hpp"

namespace rbvs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Enumerations larger than this need max_dim or MC3.
constexpr std::uint64_t kMaxEnumeration = std::uint64_t{1} << 22;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

template <typename Int>
bool parse_int(std::string_view text, Int& out) {
  text = trim(text);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

double require_double(std::string_view key, std::string_view value) {
  double v;
  if (!parse_double(value, v) || !std::isfinite(v))
    throw ConfigError("setting '" + std::string(key) + "' needs a number, got '" + std::string(value) + "'");
  return v;
}

template <typename Int>
Int require_int(std::string_view key, std::string_view value) {
  Int v;
  if (!parse_int(value, v))
    throw ConfigError("setting '" + std::string(key) + "' needs an integer, got '" + std::string(value) + "'");
  return v;
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  value = trim(value);
  if (value.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = value.find(',', start);
    const std::string_view item = trim(value.substr(start, comma == std::string_view::npos ? value.npos : comma - start));
    if (item.empty()) throw ConfigError("empty name in column list '" + std::string(value) + "'");
    out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(SearchMode mode) { return mode == SearchMode::enumerate ? "enumerate" : "mc3"; }
std::string_view to_string(OutputFormat format) { return format == OutputFormat::json ? "json" : "csv"; }

void apply_config_entry(AnalysisConfig& config, std::string_view key_in, std::string_view value_in) {
  const std::string key = lower(trim(key_in));
  const std::string_view value = trim(value_in);
  if (key == "data" || key == "data_path") {
    config.data_path = std::string(value);
  } else if (key == "response") {
    config.response_column = std::string(value);
  } else if (key == "fixed") {
    config.fixed_columns = split_list(value);
  } else if (key == "candidates") {
    config.candidate_columns = split_list(value);
  } else if (key == "null_model") {
    const std::string v = lower(value);
    if (v == "intercept")
      config.null_model = NullModel::intercept;
    else if (v == "none")
      config.null_model = NullModel::none;
    else
      throw ConfigError("null_model must be 'intercept' or 'none', got '" + std::string(value) + "'");
  } else if (key == "prior") {
    const auto rule = parse_rho_rule(lower(value));
    if (!rule)
      throw ConfigError("unknown prior '" + std::string(value) +
                        "' (expected recommended, constant, hyper-g, hyper-g/n, cui-george or berger-original)");
    config.hp.rule = *rule;
  } else if (key == "a") {
    config.hp.a = require_double(key, value);
  } else if (key == "b") {
    config.hp.b = require_double(key, value);
  } else if (key == "rho") {
    config.hp.rho_value = require_double(key, value);
    config.hp.rule = RhoRule::constant;
  } else if (key == "sigma") {
    if (lower(value) == "none" || value.empty())
      config.hp.sigma_known.reset();
    else
      config.hp.sigma_known = require_double(key, value);
  } else if (key == "max_dim") {
    if (lower(value) == "none" || value.empty())
      config.max_dim.reset();
    else
      config.max_dim = require_int<int>(key, value);
  } else if (key == "search") {
    const std::string v = lower(value);
    if (v == "enumerate")
      config.search = SearchMode::enumerate;
    else if (v == "mc3")
      config.search = SearchMode::mc3;
    else
      throw ConfigError("search must be 'enumerate' or 'mc3', got '" + std::string(value) + "'");
  } else if (key == "iterations") {
    config.mc3.iterations = require_int<std::int64_t>(key, value);
  } else if (key == "chains") {
    config.mc3.chains = require_int<int>(key, value);
  } else if (key == "seed") {
    config.mc3.seed = require_int<std::uint64_t>(key, value);
  } else if (key == "rel_tol") {
    config.rel_tol = require_double(key, value);
  } else if (key == "format") {
    const std::string v = lower(value);
    if (v == "json")
      config.format = OutputFormat::json;
    else if (v == "csv")
      config.format = OutputFormat::csv;
    else
      throw ConfigError("format must be 'json' or 'csv', got '" + std::string(value) + "'");
  } else if (key == "threads") {
    config.threads = require_int<int>(key, value);
  } else if (key == "report_limit") {
    config.report_limit = require_int<std::size_t>(key, value);
  } else if (key == "out") {
    config.out_path = std::string(value);
  } else {
    throw ConfigError("unknown setting '" + std::string(key_in) + "'");
  }
}

void load_config_file(AnalysisConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    try {
      apply_config_entry(config, text.substr(0, eq), text.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void validate_config(const AnalysisConfig& config) {
  if (!(config.hp.a > 0.0)) throw ConfigError("a must be positive");
  if (!(config.hp.b > 0.0)) throw ConfigError("b must be positive");
  if (config.hp.rule == RhoRule::constant && !(config.hp.rho_value > 0.0))
    throw ConfigError("the constant prior needs rho > 0");
  if (config.hp.sigma_known && !(*config.hp.sigma_known > 0.0)) throw ConfigError("sigma must be positive");
  if (!(config.rel_tol > 1e-14 && config.rel_tol < 1e-2)) throw ConfigError("rel_tol must lie in (1e-14, 1e-2)");
  if (config.max_dim && *config.max_dim < 0) throw ConfigError("max_dim must be non-negative");
  if (config.mc3.iterations < 1) throw ConfigError("iterations must be at least 1");
  if (config.mc3.chains < 1) throw ConfigError("chains must be at least 1");
  if (config.threads < 0) throw ConfigError("threads must be non-negative");
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ROBUST_BVS_THREADS"); env != nullptr && *env != '\0') {
    int v;
    if (!parse_int(env, v) || v < 1) throw ConfigError("ROBUST_BVS_THREADS must be a positive integer");
    return v;
  }
  return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

namespace {

// Splits one CSV record. Fields are views into `line`, or into `scratch` when
// a quoted field contains doubled quotes.
void split_record(std::string_view line, std::vector<std::string_view>& fields, std::deque<std::string>& scratch,
                  std::size_t row) {
  fields.clear();
  scratch.clear();
  std::size_t i = 0;
  for (;;) {
    if (i < line.size() && line[i] == '"') {
      std::size_t j = i + 1;
      bool escaped = false;
      for (;;) {
        if (j >= line.size()) throw DataError("row " + std::to_string(row) + ": unterminated quoted field");
        if (line[j] == '"') {
          if (j + 1 < line.size() && line[j + 1] == '"') {
            escaped = true;
            j += 2;
            continue;
          }
          break;
        }
        ++j;
      }
      std::string_view body = line.substr(i + 1, j - i - 1);
      if (escaped) {
        std::string& s = scratch.emplace_back();
        for (std::size_t c = 0; c < body.size(); ++c) {
          s.push_back(body[c]);
          if (body[c] == '"') ++c;
        }
        body = s;
      }
      fields.push_back(body);
      i = j + 1;
      if (i < line.size() && line[i] != ',')
        throw DataError("row " + std::to_string(row) + ": unexpected text after a quoted field");
    } else {
      const std::size_t comma = line.find(',', i);
      fields.push_back(line.substr(i, comma == std::string_view::npos ? line.npos : comma - i));
      i = comma == std::string_view::npos ? line.size() : comma;
    }
    if (i >= line.size()) break;
    ++i;  // skip the comma
    if (i == line.size()) {
      fields.emplace_back();
      break;
    }
  }
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
  if (name.size() > 1 && name[0] == '#') {
    std::size_t idx;
    if (parse_int(std::string_view(name).substr(1), idx) && idx >= 1 && idx <= header.size()) return idx - 1;
    throw ConfigError("column index '" + name + "' is out of range (the file has " + std::to_string(header.size()) +
                      " columns)");
  }
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  std::string available;
  for (const auto& h : header) available += (available.empty() ? "" : ", ") + h;
  throw ConfigError("column '" + name + "' not found in the header (available: " + available + ")");
}

}  // namespace

Dataset load_csv(const AnalysisConfig& config) {
  if (config.data_path.empty()) throw ConfigError("no data file given");
  std::ifstream in(config.data_path, std::ios::binary);
  if (!in) throw DataError("cannot open data file '" + config.data_path + "'");

  std::string line;
  std::vector<std::string_view> fields;
  std::deque<std::string> scratch;
  if (!std::getline(in, line)) throw DataError("data file '" + config.data_path + "' is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  split_record(line, fields, scratch, 1);
  std::vector<std::string> header;
  for (auto f : fields) header.emplace_back(trim(f));
  {
    std::set<std::string> seen;
    for (const auto& h : header) {
      if (h.empty()) throw DataError("the header has an empty column name");
      if (!seen.insert(h).second) throw DataError("the header repeats column name '" + h + "'");
    }
  }

  const std::size_t response = find_column(header, config.response_column.empty() ? "#1" : config.response_column);
  std::vector<std::size_t> fixed;
  for (const auto& name : config.fixed_columns) fixed.push_back(find_column(header, name));
  std::vector<std::size_t> candidates;
  if (config.candidate_columns.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (j != response && std::find(fixed.begin(), fixed.end(), j) == fixed.end()) candidates.push_back(j);
  } else {
    for (const auto& name : config.candidate_columns) candidates.push_back(find_column(header, name));
  }
  {
    std::set<std::size_t> used{response};
    for (std::size_t j : fixed)
      if (!used.insert(j).second)
        throw ConfigError("column '" + header[j] + "' is used twice (response, fixed and candidate columns must be disjoint)");
    for (std::size_t j : candidates)
      if (!used.insert(j).second)
        throw ConfigError("column '" + header[j] + "' is used twice (response, fixed and candidate columns must be disjoint)");
  }
  if (candidates.size() > static_cast<std::size_t>(kMaxCandidates))
    throw ConfigError("at most " + std::to_string(kMaxCandidates) + " candidate columns are supported, got " +
                      std::to_string(candidates.size()));

  // Column slots: response, fixed..., candidates...
  std::vector<std::size_t> wanted{response};
  wanted.insert(wanted.end(), fixed.begin(), fixed.end());
  wanted.insert(wanted.end(), candidates.begin(), candidates.end());
  std::vector<std::vector<double>> columns(wanted.size());

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    split_record(line, fields, scratch, row);
    if (fields.size() != header.size())
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) + " fields, the header has " +
                      std::to_string(header.size()));
    for (std::size_t s = 0; s < wanted.size(); ++s) {
      const std::string_view cell = trim(fields[wanted[s]]);
      double v;
      if (cell.empty() || lower(cell) == "na" || lower(cell) == "nan")
        throw DataError("row " + std::to_string(row) + ", column '" + header[wanted[s]] +
                        "': missing value (missing data is not imputed)");
      if (!parse_double(cell, v) || !std::isfinite(v))
        throw DataError("row " + std::to_string(row) + ", column '" + header[wanted[s]] + "': '" + std::string(cell) +
                        "' is not a finite number");
      columns[s].push_back(v);
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(columns[0].size());
  if (n < 1) throw DataError("data file '" + config.data_path + "' has no data rows");

  Dataset data;
  data.y = Eigen::Map<const Eigen::VectorXd>(columns[0].data(), n);
  const bool intercept = fixed.empty() && config.null_model == NullModel::intercept;
  data.x0.resize(n, static_cast<Eigen::Index>(fixed.size()) + (intercept ? 1 : 0));
  if (intercept) {
    data.x0.col(0).setOnes();
    data.fixed_names.push_back("(intercept)");
  }
  for (std::size_t f = 0; f < fixed.size(); ++f) {
    data.x0.col(static_cast<Eigen::Index>(f)) = Eigen::Map<const Eigen::VectorXd>(columns[1 + f].data(), n);
    data.fixed_names.push_back(header[fixed[f]]);
  }
  data.x.resize(n, static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    data.x.col(static_cast<Eigen::Index>(c)) =
        Eigen::Map<const Eigen::VectorXd>(columns[1 + fixed.size() + c].data(), n);
    data.candidate_names.push_back(header[candidates[c]]);
  }
  data.validate();
  return data;
}

namespace {

[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context) {
  const std::string msg = context + ": " + e.what();
  switch (e.kind()) {
    case ErrorKind::config:
      throw ConfigError(msg);
    case ErrorKind::data:
      throw DataError(msg);
    case ErrorKind::numeric:
      throw NumericError(msg);
    case ErrorKind::validation:
      break;
  }
  throw Error(e.kind(), msg);
}

std::string model_names(const Dataset& data, ModelId m, std::string_view sep) {
  std::string out;
  for (int j = 0; j < data.p(); ++j)
    if (m.contains(j)) {
      if (!out.empty()) out += sep;
      out += data.candidate_names[static_cast<std::size_t>(j)];
    }
  return out;
}

struct Scored {
  std::optional<ModelRow> row;
  std::string skip_reason;
};

class ModelScoring {
 public:
  ModelScoring(const AnalysisConfig& config, const DesignContext& ctx) : config_(config), ctx_(ctx) {}

  Scored operator()(ModelId m) const {
    Scored out;
    ModelFit fit;
    try {
      fit = ctx_.fit(m);
    } catch (const SingularDesignError& e) {
      out.skip_reason = e.what();
      return out;
    } catch (const DataError& e) {
      out.skip_reason = e.what();
      return out;
    }
    try {
      const BayesFactor bf = log_bf_for_fit(config_.hp, ctx_, fit, config_.rel_tol);
      ModelRow row;
      row.model = m;
      row.names = model_names(ctx_.dataset(), m, "+");
      row.k = fit.k;
      row.sse = fit.sse;
      row.q = fit.q;
      row.log_bf = bf.log_value;
      row.route = bf.route;
      row.log_prior_odds = scott_berger_log_prior_odds(m, ctx_.p());
      out.row = row;
    } catch (const Error& e) {
      const std::string names = model_names(ctx_.dataset(), m, ", ");
      rethrow_with_context(e, "model {" + names + "}");
    }
    return out;
  }

 private:
  const AnalysisConfig& config_;
  const DesignContext& ctx_;
};

std::vector<Scored> score_parallel(const std::vector<ModelId>& models, const ModelScoring& scoring, int threads) {
  std::vector<Scored> results(models.size());
  std::vector<std::exception_ptr> errors(models.size());
  std::atomic<std::size_t> next{0};
  constexpr std::size_t kChunk = 64;
  auto work = [&] {
    for (;;) {
      const std::size_t start = next.fetch_add(kChunk);
      if (start >= models.size()) return;
      const std::size_t stop = std::min(models.size(), start + kChunk);
      for (std::size_t i = start; i < stop; ++i) {
        try {
          results[i] = scoring(models[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>((models.size() + kChunk - 1) / kChunk)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  // The first failing model in enumeration order, whatever the scheduling.
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

}  // namespace

AnalysisReport run_analyze(const AnalysisConfig& config, const Dataset& data) {
  validate_config(config);
  Dataset copy = data;
  copy.validate();
  const DesignContext ctx(std::move(copy));
  const int p = ctx.p();
  if (config.max_dim && *config.max_dim > p)
    throw ConfigError("max_dim (" + std::to_string(*config.max_dim) + ") exceeds the number of candidates (" +
                      std::to_string(p) + ")");
  if (ctx.n() <= ctx.k0())
    throw DataError("need more observations (n = " + std::to_string(ctx.n()) + ") than fixed columns (k0 = " +
                    std::to_string(ctx.k0()) + ")");
  if (p > 0 && !(ctx.null_sse() > 0.0))
    throw DataError("the null model fits the response exactly (SSE0 = 0); Bayes factors are undefined");

  AnalysisReport report;
  report.config = config;
  report.n = ctx.n();
  report.k0 = ctx.k0();
  report.p = p;
  report.fixed_names = ctx.dataset().fixed_names;
  report.candidate_names = ctx.dataset().candidate_names;
  report.null_sse = ctx.null_sse();

  const ModelScoring scoring(config, ctx);
  std::vector<ModelRow> rows;
  if (config.search == SearchMode::enumerate) {
    const ModelRange range = enumerate_models(p, config.max_dim);
    if (range.size() > kMaxEnumeration)
      throw ConfigError("full enumeration would score " + std::to_string(range.size()) +
                        " models; set max_dim or use search = mc3");
    std::vector<ModelId> models(range.begin(), range.end());
    std::vector<Scored> scored = score_parallel(models, scoring, resolve_threads(config.threads));
    for (std::size_t i = 0; i < models.size(); ++i) {
      if (scored[i].row)
        rows.push_back(std::move(*scored[i].row));
      else
        report.skipped.push_back({models[i], scored[i].skip_reason});
    }
  } else {
    std::map<std::uint64_t, Scored> seen;
    ModelScorer scorer = [&](ModelId m) -> std::optional<ModelEvidence> {
      auto it = seen.find(m.mask);
      if (it == seen.end()) it = seen.emplace(m.mask, scoring(m)).first;
      if (!it->second.row) return std::nullopt;
      return ModelEvidence{m, it->second.row->log_bf, it->second.row->log_prior_odds};
    };
    Mc3Options opts = config.mc3;
    check_model(opts.start, p);
    const Mc3Result result = mc3_search(scorer, p, opts);
    report.mc3_accepted = result.accepted;
    report.mc3_skipped_proposals = result.skipped_proposals;
    for (const auto& ev : result.visited) rows.push_back(*seen.at(ev.model.mask).row);
    for (const auto& [mask, s] : seen)
      if (!s.row) report.skipped.push_back({ModelId{mask}, s.skip_reason});
  }

  std::vector<ModelEvidence> evidence;
  evidence.reserve(rows.size());
  for (const auto& r : rows) evidence.push_back({r.model, r.log_bf, r.log_prior_odds});
  report.summary = posterior_model_probs(evidence, p);

  std::unordered_map<std::uint64_t, double> prob;
  for (const auto& mp : report.summary.model_probs) prob[mp.model.mask] = mp.probability;
  // Each dimension carries prior mass 1/(p+1), shared equally by its models.
  std::vector<std::uint64_t> per_dim(static_cast<std::size_t>(p) + 1, 0);
  for (auto& r : rows) {
    r.probability = prob.at(r.model.mask);
    ++per_dim[static_cast<std::size_t>(r.k)];
  }
  double covered = 0.0;
  unsigned __int128 binom = 1;  // C(p, k), exact for p <= 62
  for (int k = 0; k <= p; ++k) {
    if (k > 0) binom = binom * static_cast<unsigned>(p - k + 1) / static_cast<unsigned>(k);
    const auto count = per_dim[static_cast<std::size_t>(k)];
    covered += count == binom ? 1.0 : static_cast<double>(count) / static_cast<double>(binom);
  }
  report.evaluated_fraction = std::min(1.0, covered / (p + 1.0));
  std::sort(rows.begin(), rows.end(), [](const ModelRow& x, const ModelRow& y) {
    if (x.probability != y.probability) return x.probability > y.probability;
    return x.model.mask < y.model.mask;
  });
  report.models_evaluated = rows.size();
  report.rows = std::move(rows);
  return report;
}

AnalysisReport run_analyze(const AnalysisConfig& config) {
  validate_config(config);
  return run_analyze(config, load_csv(config));
}

namespace {

using Json = nlohmann::ordered_json;

std::string fmt(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Infinite values are written as the strings "+inf" / "-inf".
Json number(double v) {
  if (v == kInf) return "+inf";
  if (v == -kInf) return "-inf";
  return v;
}

Json names_of(const AnalysisReport& r, ModelId m) {
  Json out = Json::array();
  for (int j = 0; j < r.p; ++j)
    if (m.contains(j)) out.push_back(r.candidate_names[static_cast<std::size_t>(j)]);
  return out;
}

std::string display(const ModelRow& row) { return row.names.empty() ? "(null)" : row.names; }

std::size_t reported_rows(const AnalysisReport& r) {
  return r.config.report_limit == 0 ? r.rows.size() : std::min(r.rows.size(), r.config.report_limit);
}

Json config_echo(const AnalysisConfig& c) {
  Json prior;
  prior["rule"] = std::string(to_string(c.hp.rule));
  prior["a"] = c.hp.a;
  prior["b"] = c.hp.b;
  if (c.hp.rule == RhoRule::constant) prior["rho"] = c.hp.rho_value;
  prior["sigma_known"] = c.hp.sigma_known ? Json(*c.hp.sigma_known) : Json(nullptr);
  Json search;
  search["mode"] = std::string(to_string(c.search));
  if (c.search == SearchMode::mc3) {
    search["iterations"] = c.mc3.iterations;
    search["chains"] = c.mc3.chains;
    search["seed"] = c.mc3.seed;
  }
  Json out;
  out["data_path"] = c.data_path;
  out["response"] = c.response_column;
  out["fixed"] = c.fixed_columns;
  out["candidates"] = c.candidate_columns;
  out["null_model"] = c.null_model == NullModel::intercept ? "intercept" : "none";
  out["prior"] = prior;
  out["max_dim"] = c.max_dim ? Json(*c.max_dim) : Json(nullptr);
  out["search"] = search;
  out["rel_tol"] = c.rel_tol;
  out["report_limit"] = c.report_limit;
  return out;
}

std::string render_json(const AnalysisReport& r) {
  Json out;
  out["schema_version"] = kReportSchemaVersion;
  out["tool"] = {{"name", "robust_bvs"}, {"version", std::string(kVersion)}};
  out["config"] = config_echo(r.config);
  out["data"] = {{"n", r.n},
                 {"k0", r.k0},
                 {"p", r.p},
                 {"fixed_columns", r.fixed_names},
                 {"candidate_columns", r.candidate_names},
                 {"null_sse", r.null_sse}};

  const std::size_t shown = reported_rows(r);
  auto model_ref = [&](ModelId m) {
    Json j;
    j["mask"] = m.mask;
    j["covariates"] = names_of(r, m);
    return j;
  };
  Json summary;
  summary["models_evaluated"] = r.models_evaluated;
  summary["models_reported"] = shown;
  summary["models_skipped"] = r.skipped.size();
  summary["evaluated_fraction"] = r.evaluated_fraction;
  summary["normalizing_log_const"] = number(r.summary.normalizing_log_const);
  summary["hpm"] = model_ref(r.summary.hpm);
  summary["mpm"] = model_ref(r.summary.mpm);
  if (r.config.search == SearchMode::mc3)
    summary["mc3"] = {{"accepted", r.mc3_accepted}, {"skipped_proposals", r.mc3_skipped_proposals}};
  out["summary"] = summary;

  Json inclusion = Json::array();
  for (int j = 0; j < r.p; ++j)
    inclusion.push_back({{"covariate", r.candidate_names[static_cast<std::size_t>(j)]},
                         {"probability", r.summary.inclusion_probs[static_cast<std::size_t>(j)]}});
  out["inclusion_probabilities"] = inclusion;

  Json models = Json::array();
  for (std::size_t i = 0; i < shown; ++i) {
    const ModelRow& row = r.rows[i];
    Json m;
    m["rank"] = i + 1;
    m["mask"] = row.model.mask;
    m["covariates"] = names_of(r, row.model);
    m["k"] = row.k;
    m["sse"] = row.sse;
    m["q"] = row.q;
    m["log_bf"] = number(row.log_bf);
    m["bf_route"] = std::string(to_string(row.route));
    m["log_prior_odds"] = row.log_prior_odds;
    m["posterior_prob"] = row.probability;
    models.push_back(std::move(m));
  }
  out["models"] = models;

  Json skipped = Json::array();
  for (std::size_t i = 0; i < r.skipped.size() && (r.config.report_limit == 0 || i < r.config.report_limit); ++i)
    skipped.push_back({{"mask", r.skipped[i].model.mask},
                       {"covariates", names_of(r, r.skipped[i].model)},
                       {"reason", r.skipped[i].reason}});
  out["skipped_models"] = skipped;

  std::string inclusion_tsv = "covariate\tinclusion_prob\n";
  for (int j = 0; j < r.p; ++j)
    inclusion_tsv += r.candidate_names[static_cast<std::size_t>(j)] + "\t" +
                     fmt(r.summary.inclusion_probs[static_cast<std::size_t>(j)]) + "\n";
  std::string top_tsv = "rank\tmask\tmodel\tposterior_prob\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(20, r.rows.size()); ++i)
    top_tsv += std::to_string(i + 1) + "\t" + std::to_string(r.rows[i].model.mask) + "\t" + display(r.rows[i]) + "\t" +
               fmt(r.rows[i].probability) + "\n";
  out["plot_data"] = {{"inclusion_tsv", inclusion_tsv}, {"top_models_tsv", top_tsv}};
  return out.dump(2) + "\n";
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string render_csv(const AnalysisReport& r) {
  std::ostringstream out;
  out << "rank,mask,covariates,k,sse,q,log_bf,bf_route,log_prior_odds,posterior_prob\n";
  const std::size_t shown = reported_rows(r);
  for (std::size_t i = 0; i < shown; ++i) {
    const ModelRow& row = r.rows[i];
    std::string names;
    for (int j = 0; j < r.p; ++j)
      if (row.model.contains(j)) names += (names.empty() ? "" : ";") + r.candidate_names[static_cast<std::size_t>(j)];
    out << i + 1 << ',' << row.model.mask << ',' << csv_quote(names) << ',' << row.k << ',' << fmt(row.sse) << ','
        << fmt(row.q) << ',' << fmt(row.log_bf) << ',' << to_string(row.route) << ',' << fmt(row.log_prior_odds)
        << ',' << fmt(row.probability) << '\n';
  }
  return out.str();
}

}  // namespace

std::string render_report(const AnalysisReport& report, OutputFormat format) {
  return format == OutputFormat::json ? render_json(report) : render_csv(report);
}

}  // namespace rbvs
