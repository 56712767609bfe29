#include "relci/experiment.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "relci/bootstrap_ci.h"
#include "relci/corpus_io.h"
#include "relci/crc_ci.h"
#include "relci/errors.h"
#include "relci/parallel.h"
#include "relci/ppi_ci.h"
#include "relci/random.h"
#include "relci/stats.h"

namespace relci {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream tags for seeds derived from a repeat seed.
constexpr std::uint64_t kBootstrapStream = 1;
constexpr std::uint64_t kCrcBatchStream = 2;

std::string Real(double x) { return fmt::format("{:.17g}", x); }

// Draws `n` distinct indices from [0, population) by a partial Fisher-Yates
// shuffle.
std::vector<int> SampleWithoutReplacement(int population, int n,
                                          std::uint64_t seed) {
  std::vector<int> pool(population);
  for (int i = 0; i < population; ++i) pool[i] = i;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const int j = i + static_cast<int>(rng.Index(population - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  return pool;
}

// Everything a repeat needs for one (beta, tau) grid point: validation
// queries occupy indices [0, num_validation), test queries the rest.
struct GridData {
  const PreparedQueries* prepared = nullptr;
  int num_validation = 0;
  std::vector<int> test;
  double truth = 0.0;
};

SweepRow FailedRow(SweepRow row, const std::string& status) {
  row.status = status;
  row.width = row.low = row.high = kNaN;
  row.covered = false;
  return row;
}

SweepRow RunMethod(Method method, const GridData& grid,
                   const std::vector<int>& labeled,
                   const SweepSettings& settings, std::uint64_t repeat_seed,
                   SweepRow row) {
  const PreparedQueries& prepared = *grid.prepared;
  row.method = method;
  row.truth = grid.truth;
  try {
    double low = 0.0;
    double high = 0.0;
    switch (method) {
      case Method::kBootstrap: {
        std::vector<double> values;
        values.reserve(labeled.size());
        for (int q : labeled) values.push_back(prepared.TrueUtility(q));
        BootstrapOptions options;
        options.alpha = settings.alpha;
        options.resamples = settings.bootstrap_resamples;
        options.seed = DeriveSeed(repeat_seed, kBootstrapStream);
        const CiReport ci = BootstrapCi(values, options);
        low = ci.lower;
        high = ci.upper;
        break;
      }
      case Method::kPpi: {
        std::vector<double> true_u;
        std::vector<double> pred_labeled;
        std::vector<double> pred_all;
        for (int q : labeled) {
          true_u.push_back(prepared.TrueUtility(q));
          pred_labeled.push_back(prepared.PredictedUtility(q));
          pred_all.push_back(prepared.PredictedUtility(q));
        }
        for (int q : grid.test) pred_all.push_back(prepared.PredictedUtility(q));
        const CiReport ci =
            PpiCi(ComputePpiEstimate(true_u, pred_labeled, pred_all),
                  settings.alpha);
        low = ci.lower;
        high = ci.upper;
        break;
      }
      case Method::kCrc: {
        const int size = settings.crc_batch_size > 0
                             ? settings.crc_batch_size
                             : static_cast<int>(labeled.size());
        const std::uint64_t batch_seed =
            DeriveSeed(repeat_seed, kCrcBatchStream);
        std::vector<std::vector<int>> batches(settings.crc_batches);
        for (int b = 0; b < settings.crc_batches; ++b) {
          Rng rng(DeriveSeed(batch_seed, static_cast<std::uint64_t>(b)));
          batches[b].reserve(size);
          for (int j = 0; j < size; ++j) {
            batches[b].push_back(labeled[rng.Index(labeled.size())]);
          }
        }
        const CrcCalibration calibration =
            Calibrate(prepared, batches, settings.alpha);
        for (int q : grid.test) {
          low += prepared.CrcUtility(q, calibration.lambda_low);
          high += prepared.CrcUtility(q, calibration.lambda_high);
        }
        low /= static_cast<double>(grid.test.size());
        high /= static_cast<double>(grid.test.size());
        break;
      }
    }
    row.low = low;
    row.high = high;
    row.width = high - low;
    row.covered = low <= grid.truth && grid.truth <= high;
    row.status = "ok";
    return row;
  } catch (const Error& e) {
    return FailedRow(row, std::string(ErrorCodeName(e.code())));
  }
}

int MethodOrder(Method m) { return static_cast<int>(m); }

auto RowKey(const SweepRow& r) {
  return std::make_tuple(MethodOrder(r.method), r.n, r.beta, r.tau, r.repeat);
}

}  // namespace

std::string_view MethodName(Method method) {
  switch (method) {
    case Method::kBootstrap: return "bootstrap";
    case Method::kPpi: return "ppi";
    case Method::kCrc: return "crc";
  }
  return "unknown";
}

Method ParseMethod(std::string_view name) {
  if (name == "bootstrap") return Method::kBootstrap;
  if (name == "ppi") return Method::kPpi;
  if (name == "crc") return Method::kCrc;
  throw Error(ErrorCode::kUsage,
              fmt::format("method '{}' must be bootstrap, ppi or crc", name));
}

std::vector<SweepRow> RunSweep(const Dataset& dataset, const Split& split,
                               const SweepSettings& settings) {
  if (settings.repeats < 1) {
    throw Error(ErrorCode::kInvalidArgument, "repeats must be >= 1");
  }
  if (settings.n_grid.empty() || settings.beta_grid.empty() ||
      settings.tau_grid.empty() || settings.methods.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "sweep grids must be non-empty");
  }
  if (split.validation_queries.empty() || split.test_queries.empty()) {
    throw Error(ErrorCode::kEmptyQuerySet,
                "sweep needs non-empty validation and test splits");
  }
  for (const auto& q : split.test_queries) {
    if (!dataset.IsLabeled(q)) {
      throw Error(ErrorCode::kUnlabeledQuery,
                  fmt::format("test query '{}' has no complete truth; coverage "
                              "cannot be scored",
                              q));
    }
  }
  if (auto problems = ValidateSplit(dataset, split); !problems.empty()) {
    throw Error(ErrorCode::kInvalidDataset,
                fmt::format("invalid split: {} ({})", problems.front().message,
                            problems.front().query_id));
  }

  std::vector<QueryId> ids(split.validation_queries.begin(),
                           split.validation_queries.end());
  ids.insert(ids.end(), split.test_queries.begin(), split.test_queries.end());
  const int num_validation = static_cast<int>(split.validation_queries.size());
  const int threads =
      settings.threads > 0 ? settings.threads : DefaultThreads();

  std::vector<SweepRow> rows;
  for (double beta : settings.beta_grid) {
    for (double tau : settings.tau_grid) {
      const Dataset transformed =
          beta == 0.0 && tau == 0.0 ? Dataset{}
                                    : TransformPredictions(dataset, beta, tau);
      const Dataset& source =
          beta == 0.0 && tau == 0.0 ? dataset : transformed;
      const PreparedQueries prepared(settings.metric, source, ids);

      GridData grid;
      grid.prepared = &prepared;
      grid.num_validation = num_validation;
      for (int i = num_validation; i < prepared.size(); ++i) {
        grid.test.push_back(i);
        grid.truth += prepared.TrueUtility(i);
      }
      grid.truth /= static_cast<double>(grid.test.size());

      const int num_n = static_cast<int>(settings.n_grid.size());
      const int tasks = num_n * settings.repeats;
      std::vector<std::vector<SweepRow>> slots(tasks);
      ParallelFor(tasks, threads, [&](int task) {
        const int n = settings.n_grid[task / settings.repeats];
        const int repeat = task % settings.repeats;
        SweepRow base;
        base.n = n;
        base.beta = beta;
        base.tau = tau;
        base.repeat = repeat;
        base.truth = grid.truth;
        auto& out = slots[task];
        if (n < 2 || n > num_validation) {
          for (Method m : settings.methods) {
            base.method = m;
            out.push_back(FailedRow(base, "insufficient-data"));
          }
          return;
        }
        const std::uint64_t repeat_seed =
            DeriveSeed(DeriveSeed(settings.seed, static_cast<std::uint64_t>(n)),
                       static_cast<std::uint64_t>(repeat));
        const std::vector<int> labeled =
            SampleWithoutReplacement(num_validation, n, repeat_seed);
        for (Method m : settings.methods) {
          out.push_back(RunMethod(m, grid, labeled, settings, repeat_seed, base));
        }
      });
      for (auto& slot : slots) {
        for (auto& row : slot) rows.push_back(std::move(row));
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SweepRow& a, const SweepRow& b) {
                     return RowKey(a) < RowKey(b);
                   });
  return rows;
}

std::vector<SweepAggregate> Aggregate(const std::vector<SweepRow>& rows) {
  std::map<std::tuple<int, int, double, double>, std::vector<const SweepRow*>>
      groups;
  for (const auto& row : rows) {
    groups[{MethodOrder(row.method), row.n, row.beta, row.tau}].push_back(&row);
  }
  std::vector<SweepAggregate> out;
  for (const auto& [key, members] : groups) {
    SweepAggregate agg;
    agg.method = members.front()->method;
    agg.n = members.front()->n;
    agg.beta = members.front()->beta;
    agg.tau = members.front()->tau;
    agg.runs = static_cast<int>(members.size());
    std::vector<double> widths;
    int covered = 0;
    for (const SweepRow* row : members) {
      if (row->status != "ok") {
        ++agg.failures;
        continue;
      }
      widths.push_back(row->width);
      covered += row->covered;
    }
    // Failed runs produce no interval and count as not covered.
    agg.coverage = static_cast<double>(covered) / agg.runs;
    const double se =
        std::sqrt(agg.coverage * (1.0 - agg.coverage) / agg.runs);
    agg.coverage_lo = agg.coverage - 1.96 * se;
    agg.coverage_hi = agg.coverage + 1.96 * se;
    if (widths.empty()) {
      agg.mean_width = agg.width_p025 = agg.width_p975 = kNaN;
    } else {
      agg.mean_width = stats::Mean(widths);
      std::sort(widths.begin(), widths.end());
      agg.width_p025 = stats::SortedQuantile(widths, 0.025);
      agg.width_p975 = stats::SortedQuantile(widths, 0.975);
    }
    out.push_back(agg);
  }
  return out;
}

std::string SweepRowsCsv(const std::vector<SweepRow>& rows) {
  std::string out = "method,n,beta,tau,repeat,width,covered,low,high,truth,status\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", MethodName(r.method),
                       r.n, Real(r.beta), Real(r.tau), r.repeat, Real(r.width),
                       r.covered ? 1 : 0, Real(r.low), Real(r.high),
                       Real(r.truth), r.status);
  }
  return out;
}

std::string AggregatesCsv(const std::vector<SweepAggregate>& aggregates) {
  std::string out =
      "method,n,beta,tau,runs,failures,mean_width,width_p025,width_p975,"
      "coverage,coverage_lo,coverage_hi\n";
  for (const auto& a : aggregates) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n",
                       MethodName(a.method), a.n, Real(a.beta), Real(a.tau),
                       a.runs, a.failures, Real(a.mean_width),
                       Real(a.width_p025), Real(a.width_p975), Real(a.coverage),
                       Real(a.coverage_lo), Real(a.coverage_hi));
  }
  return out;
}

std::vector<PerQueryRow> RunPerQuery(const Dataset& dataset, const Split& split,
                                     const MetricSpec& metric, double alpha,
                                     double tau, std::optional<int> n_labeled,
                                     std::uint64_t seed) {
  if (split.test_queries.empty()) {
    throw Error(ErrorCode::kEmptyQuerySet, "per-query dump needs test queries");
  }
  const Dataset transformed = TransformPredictions(dataset, 0.0, tau);
  std::vector<QueryId> validation(split.validation_queries.begin(),
                                  split.validation_queries.end());
  if (n_labeled) {
    if (*n_labeled < 1 || *n_labeled > static_cast<int>(validation.size())) {
      throw Error(ErrorCode::kInsufficientData,
                  fmt::format("cannot draw {} labeled queries from {}",
                              *n_labeled, validation.size()));
    }
    std::vector<QueryId> drawn;
    for (int i : SampleWithoutReplacement(static_cast<int>(validation.size()),
                                          *n_labeled, seed)) {
      drawn.push_back(validation[i]);
    }
    validation = std::move(drawn);
  }
  const auto batches = BuildBatches(validation, PerQueryBatching{}, seed);
  const CrcCalibration calibration =
      Calibrate(metric, batches, transformed, alpha);

  const std::vector<QueryId> test(split.test_queries.begin(),
                                  split.test_queries.end());
  const PreparedQueries prepared(metric, transformed, test);
  std::vector<PerQueryRow> rows;
  rows.reserve(test.size());
  for (int i = 0; i < prepared.size(); ++i) {
    PerQueryRow row;
    row.tau = tau;
    row.query_id = prepared.id(i);
    row.low = prepared.CrcUtility(i, calibration.lambda_low);
    row.high = prepared.CrcUtility(i, calibration.lambda_high);
    row.truth = prepared.TrueUtility(i);
    row.predicted = prepared.PredictedUtility(i);
    row.covered = row.low <= row.truth && row.truth <= row.high;
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(),
            [](const PerQueryRow& a, const PerQueryRow& b) {
              if (a.truth != b.truth) return a.truth > b.truth;
              return a.query_id < b.query_id;
            });
  return rows;
}

std::string PerQueryCsv(const std::vector<PerQueryRow>& rows) {
  std::string out = "tau,query_id,low,high,truth,predicted,covered\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", Real(r.tau), r.query_id,
                       Real(r.low), Real(r.high), Real(r.truth),
                       Real(r.predicted), r.covered ? 1 : 0);
  }
  return out;
}

ExperimentPlan DefaultPlan() {
  ExperimentPlan plan;
  plan.synth = SynthConfig{};
  return plan;
}

namespace {

template <typename T>
void Read(const nlohmann::json& json, const char* key, T& out) {
  if (json.contains(key)) out = json.at(key).get<T>();
}

double ReadSharpness(const nlohmann::json& value) {
  if (value.is_string()) {
    const auto text = value.get<std::string>();
    if (text == "inf" || text == "infinity") return SynthConfig::kPerfectAnnotator;
    throw Error(ErrorCode::kParse,
                fmt::format("annotator_sharpness '{}' is not a number", text));
  }
  return value.get<double>();
}

SynthConfig ParseSynthConfig(const nlohmann::json& json) {
  SynthConfig config;
  int max_label = config.scale.max_label();
  Read(json, "num_queries", config.num_queries);
  Read(json, "docs_per_query", config.docs_per_query);
  Read(json, "max_label", max_label);
  config.scale = LabelScale(max_label);
  if (json.contains("truth_prior")) {
    config.truth_prior = json.at("truth_prior").get<std::vector<double>>();
  } else if (max_label != 3) {
    config.truth_prior.assign(max_label + 1, 1.0 / (max_label + 1));
  }
  if (json.contains("annotator_sharpness")) {
    config.annotator_sharpness = ReadSharpness(json.at("annotator_sharpness"));
  }
  Read(json, "annotator_noise", config.annotator_noise);
  Read(json, "ranking_noise", config.ranking_noise);
  Read(json, "query_difficulty", config.query_difficulty);
  Read(json, "seed", config.seed);
  ValidateSynthConfig(config);
  return config;
}

}  // namespace

ExperimentPlan ParsePlan(std::string_view json_text) {
  ExperimentPlan plan = DefaultPlan();
  try {
    const auto json = nlohmann::json::parse(json_text);
    if (!json.is_object()) {
      throw Error(ErrorCode::kParse, "plan must be a JSON object");
    }
    Read(json, "name", plan.name);
    if (json.contains("synth")) plan.synth = ParseSynthConfig(json.at("synth"));
    if (json.contains("run")) {
      plan.synth.reset();
      plan.run_path = json.at("run").get<std::string>();
      plan.qrels_path = json.value("qrels", std::string());
      plan.dists_path = json.value("dists", std::string());
    }
    Read(json, "max_label", plan.max_label);
    Read(json, "split_ratio", plan.split_ratio);
    SweepSettings& s = plan.sweep;
    if (json.contains("metric")) {
      const auto name = json.at("metric").get<std::string>();
      s.metric = json.contains("gain")
                     ? ParseMetric(name, ParseGain(json.at("gain").get<std::string>()))
                     : ParseMetric(name);
    }
    Read(json, "alpha", s.alpha);
    if (json.contains("methods")) {
      s.methods.clear();
      for (const auto& m : json.at("methods")) {
        s.methods.push_back(ParseMethod(m.get<std::string>()));
      }
    }
    Read(json, "n_grid", s.n_grid);
    Read(json, "beta_grid", s.beta_grid);
    Read(json, "tau_grid", s.tau_grid);
    Read(json, "repeats", s.repeats);
    Read(json, "bootstrap_resamples", s.bootstrap_resamples);
    Read(json, "crc_batches", s.crc_batches);
    Read(json, "crc_batch_size", s.crc_batch_size);
    Read(json, "seed", s.seed);
    Read(json, "threads", s.threads);
    Read(json, "per_query_taus", plan.per_query_taus);
    if (json.contains("output_dir")) {
      plan.output_dir = json.at("output_dir").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("invalid plan: {}", e.what()));
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, fmt::format("invalid plan: {}", e.what()));
  }
  if (plan.sweep.repeats < 1) {
    throw Error(ErrorCode::kParse, "plan repeats must be >= 1");
  }
  if (plan.sweep.n_grid.empty() || plan.sweep.beta_grid.empty() ||
      plan.sweep.tau_grid.empty() || plan.sweep.methods.empty()) {
    throw Error(ErrorCode::kParse, "plan grids must be non-empty");
  }
  return plan;
}

Dataset LoadPlanDataset(const ExperimentPlan& plan) {
  if (plan.synth) return Generate(*plan.synth);
  const LabelScale scale(plan.max_label);
  return AssembleDataset(scale, ParseRun(ReadFile(plan.run_path)),
                         ParseQrels(ReadFile(plan.qrels_path), scale),
                         ParseDists(ReadFile(plan.dists_path), scale));
}

PlanResult RunPlan(const ExperimentPlan& plan) {
  const Dataset dataset = LoadPlanDataset(plan);
  const Split split =
      SplitDataset(dataset, plan.split_ratio, std::nullopt, plan.sweep.seed);

  PlanResult result;
  result.rows = RunSweep(dataset, split, plan.sweep);
  result.aggregates = Aggregate(result.rows);
  for (double tau : plan.per_query_taus) {
    try {
      auto rows = RunPerQuery(dataset, split, plan.sweep.metric,
                              plan.sweep.alpha, tau, std::nullopt,
                              plan.sweep.seed);
      result.per_query.insert(result.per_query.end(), rows.begin(), rows.end());
    } catch (const Error& e) {
      result.failures.push_back(
          fmt::format("per-query tau={}: {}", tau, e.what()));
    }
  }

  std::error_code ec;
  std::filesystem::create_directories(plan.output_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, fmt::format("cannot create '{}': {}",
                                            plan.output_dir.string(),
                                            ec.message()));
  }
  WriteFile(plan.output_dir / "runs.csv", SweepRowsCsv(result.rows));
  WriteFile(plan.output_dir / "summary.csv", AggregatesCsv(result.aggregates));
  WriteFile(plan.output_dir / "per_query.csv", PerQueryCsv(result.per_query));
  return result;
}

}  // namespace relci
