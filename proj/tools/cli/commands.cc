#include "commands.h"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string_view>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "relci/bootstrap_ci.h"
#include "relci/corpus_io.h"
#include "relci/crc_ci.h"
#include "relci/experiment.h"
#include "relci/metrics.h"
#include "relci/ppi_ci.h"
#include "relci/random.h"
#include "relci/synthetic_lab.h"

namespace relci::cli {
namespace {

using Json = nlohmann::ordered_json;

enum class Format { kText, kCsv, kJson };

// Dataset source flags shared by the data-consuming commands.
struct SourceOptions {
  std::string run;
  std::string qrels;
  std::string dists;
  int max_label = 3;
  bool synthetic = false;
};

struct SynthOptions {
  int num_queries = 200;
  int docs_per_query = 100;
  int max_label = 3;
  std::vector<double> prior;
  std::string sharpness = "4";
  double annotator_noise = 0.0;
  double ranking_noise = 1.0;
  double query_difficulty = 0.0;
};

struct Options {
  std::string metric = "dcg@10";
  std::string gain;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string format = "text";
  std::string out;
  int threads = 1;
  double split_ratio = 0.5;

  // ci / calibrate
  std::string method = "crc";
  int batches = 2'000;
  int batch_size = 0;
  bool per_query = false;
  int n_labeled = 0;
  int resamples = 10'000;
  double beta = 0.0;
  double tau = 0.0;
  std::string calibration;

  // sweep
  std::vector<int> n_grid = {10, 20, 40, 80};
  std::vector<double> beta_grid = {0.0};
  std::vector<double> tau_grid = {0.0};
  std::vector<std::string> methods = {"bootstrap", "ppi", "crc"};
  int repeats = 500;

  std::string plan;

  SourceOptions source;
  SynthOptions synth;
};

std::string Num(double x) { return fmt::format("{:.6f}", x); }

Format ParseFormat(const std::string& name) {
  if (name == "text") return Format::kText;
  if (name == "csv") return Format::kCsv;
  if (name == "json") return Format::kJson;
  throw Error(ErrorCode::kUsage,
              fmt::format("format '{}' must be text, csv or json", name));
}

MetricSpec Metric(const Options& o) {
  try {
    return o.gain.empty() ? ParseMetric(o.metric)
                          : ParseMetric(o.metric, ParseGain(o.gain));
  } catch (const Error& e) {
    throw Error(ErrorCode::kUsage, e.what());
  }
}

SynthConfig MakeSynthConfig(const SynthOptions& s, std::uint64_t seed) {
  SynthConfig config;
  config.num_queries = s.num_queries;
  config.docs_per_query = s.docs_per_query;
  config.scale = LabelScale(s.max_label);
  if (!s.prior.empty()) {
    config.truth_prior = s.prior;
  } else if (s.max_label != 3) {
    config.truth_prior.assign(s.max_label + 1, 1.0 / (s.max_label + 1));
  }
  if (s.sharpness == "inf" || s.sharpness == "infinity") {
    config.annotator_sharpness = SynthConfig::kPerfectAnnotator;
  } else {
    try {
      std::size_t used = 0;
      config.annotator_sharpness = std::stod(s.sharpness, &used);
      if (used != s.sharpness.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::kUsage,
                  fmt::format("--sharpness '{}' is not a number", s.sharpness));
    }
  }
  config.annotator_noise = s.annotator_noise;
  config.ranking_noise = s.ranking_noise;
  config.query_difficulty = s.query_difficulty;
  config.seed = seed;
  try {
    ValidateSynthConfig(config);
  } catch (const Error& e) {
    throw Error(ErrorCode::kUsage, e.what());
  }
  return config;
}

Dataset LoadSource(const Options& o, bool require_dists = true) {
  const SourceOptions& s = o.source;
  if (s.synthetic) {
    if (!s.run.empty()) {
      throw Error(ErrorCode::kUsage, "--synthetic conflicts with --run");
    }
    return Generate(MakeSynthConfig(o.synth, o.seed));
  }
  if (s.run.empty()) {
    throw Error(ErrorCode::kUsage, "--run is required (or use --synthetic)");
  }
  if (require_dists && s.dists.empty()) {
    throw Error(ErrorCode::kUsage, "--dists is required");
  }
  if (s.max_label < 1) {
    throw Error(ErrorCode::kUsage, "--max-label must be >= 1");
  }
  const LabelScale scale(s.max_label);
  const auto annotate = [](const std::string& path, auto&& parse) {
    try {
      return parse(ReadFile(path));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kIo) throw;
      throw Error(e.code(), fmt::format("{}: {}", path, e.what()));
    }
  };
  RankingMap rankings =
      annotate(s.run, [](const std::string& t) { return ParseRun(t); });
  TruthMap truth;
  if (!s.qrels.empty()) {
    truth = annotate(s.qrels,
                     [&](const std::string& t) { return ParseQrels(t, scale); });
  }
  PredictionMap predicted;
  if (!s.dists.empty()) {
    predicted = annotate(
        s.dists, [&](const std::string& t) { return ParseDists(t, scale); });
  }
  return AssembleDataset(scale, std::move(rankings), std::move(truth),
                         std::move(predicted));
}

void CheckAlpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kUsage,
                fmt::format("--alpha must be in (0, 1), got {}", alpha));
  }
}

void AddSourceOptions(CLI::App* cmd, Options& o) {
  cmd->add_option("--run", o.source.run, "TREC run file");
  cmd->add_option("--qrels", o.source.qrels, "TREC qrels file");
  cmd->add_option("--dists", o.source.dists,
                  "Predicted relevance distributions (JSON lines)");
  cmd->add_option("--max-label", o.source.max_label,
                  "Largest relevance label")
      ->capture_default_str();
  cmd->add_flag("--synthetic", o.source.synthetic,
                "Use a generated dataset instead of files");
}

void AddSynthOptions(CLI::App* cmd, Options& o) {
  SynthOptions& s = o.synth;
  cmd->add_option("--num-queries", s.num_queries)->capture_default_str();
  cmd->add_option("--docs-per-query", s.docs_per_query)->capture_default_str();
  cmd->add_option("--synth-max-label", s.max_label,
                  "Largest label of the generated scale")
      ->capture_default_str();
  cmd->add_option("--prior", s.prior, "True-label prior, label 0 first")
      ->delimiter(',');
  cmd->add_option("--sharpness", s.sharpness,
                  "Annotator sharpness (> 0, or inf)")
      ->capture_default_str();
  cmd->add_option("--annotator-noise", s.annotator_noise)
      ->capture_default_str();
  cmd->add_option("--ranking-noise", s.ranking_noise)->capture_default_str();
  cmd->add_option("--query-difficulty", s.query_difficulty)
      ->capture_default_str();
}

void AddCommonOptions(CLI::App* cmd, Options& o) {
  cmd->add_option("--metric", o.metric, "dcg@K or prec@K")
      ->capture_default_str();
  cmd->add_option("--gain", o.gain,
                  "identity or exponential (default: exponential for dcg, "
                  "identity for prec)");
  cmd->add_option("--format", o.format, "text, csv or json")
      ->capture_default_str();
}

// Draws `n` validation queries without replacement; n = 0 keeps all.
std::vector<QueryId> LabeledSample(const std::set<QueryId>& validation, int n,
                                   std::uint64_t seed) {
  std::vector<QueryId> pool(validation.begin(), validation.end());
  if (n == 0) return pool;
  if (n < 0 || n > static_cast<int>(pool.size())) {
    throw Error(ErrorCode::kInsufficientData,
                fmt::format("--n-labeled {} but the validation split has {} "
                            "labeled queries",
                            n, pool.size()));
  }
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const std::size_t j = i + rng.Index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  std::sort(pool.begin(), pool.end());
  return pool;
}

struct Prepared {
  Dataset dataset;
  Split split;
  std::vector<QueryId> labeled;
};

Prepared PrepareSplit(const Options& o, std::ostream& err) {
  if (!(o.split_ratio > 0.0 && o.split_ratio < 1.0)) {
    throw Error(ErrorCode::kUsage, "--split-ratio must be in (0, 1)");
  }
  if (!(o.beta >= 0.0 && o.beta <= 1.0) || !(o.tau >= 0.0 && o.tau <= 1.0)) {
    throw Error(ErrorCode::kUsage, "--beta and --tau must be in [0, 1]");
  }
  Prepared p;
  p.dataset = LoadSource(o);
  if (o.beta != 0.0 || o.tau != 0.0) {
    p.dataset = TransformPredictions(p.dataset, o.beta, o.tau);
  }
  p.split = SplitDataset(p.dataset, o.split_ratio, std::nullopt, o.seed);
  for (const auto& w : p.split.warnings) fmt::print(err, "warning: {}\n", w);
  if (p.split.validation_queries.empty()) {
    throw Error(ErrorCode::kNoCalibrationData,
                "no labeled queries in the validation split");
  }
  p.labeled = LabeledSample(p.split.validation_queries, o.n_labeled,
                            DeriveSeed(o.seed, 0x6c6162656cULL));
  return p;
}

std::vector<CalibrationBatch> MakeBatches(const Options& o,
                                          const std::vector<QueryId>& labeled) {
  if (o.per_query) return BuildBatches(labeled, PerQueryBatching{}, o.seed);
  return BuildBatches(labeled, BootstrapBatching{o.batches, o.batch_size},
                      o.seed);
}

CrcCalibration CalibrateFromOptions(const Options& o, const Prepared& p) {
  if (o.batches < 1 || o.batch_size < 0) {
    throw Error(ErrorCode::kUsage,
                "--batches must be >= 1 and --batch-size >= 0");
  }
  return Calibrate(Metric(o), MakeBatches(o, p.labeled), p.dataset, o.alpha);
}

void PrintReport(const CiReport& r, Format format, std::ostream& out) {
  switch (format) {
    case Format::kText:
      fmt::print(out, "{:<10} {:>12} {:>12} {:>12} {:>12}\n", "method",
                 "estimate", "lower", "upper", "width");
      fmt::print(out, "{:<10} {:>12} {:>12} {:>12} {:>12}\n", r.method,
                 Num(r.estimate), Num(r.lower), Num(r.upper), Num(r.Width()));
      for (const auto& [key, value] : r.diagnostics) {
        fmt::print(out, "  {} = {}\n", key, fmt::format("{:.10g}", value));
      }
      break;
    case Format::kCsv:
      fmt::print(out, "method,estimate,lower,upper,width,alpha\n");
      fmt::print(out, "{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.method,
                 r.estimate, r.lower, r.upper, r.Width(), r.alpha);
      break;
    case Format::kJson: {
      Json j;
      j["method"] = r.method;
      j["alpha"] = r.alpha;
      j["estimate"] = r.estimate;
      j["lower"] = r.lower;
      j["upper"] = r.upper;
      j["width"] = r.Width();
      j["diagnostics"] = Json::object();
      for (const auto& [key, value] : r.diagnostics) j["diagnostics"][key] = value;
      out << j.dump(2) << "\n";
      break;
    }
  }
}

int CmdEvaluate(const Options& o, std::ostream& out) {
  const Format format = ParseFormat(o.format);
  const MetricSpec metric = Metric(o);
  const Dataset dataset = LoadSource(o);
  struct Row {
    QueryId id;
    std::optional<double> truth;
    double predicted;
  };
  std::vector<Row> rows;
  double sum_true = 0.0;
  double sum_pred = 0.0;
  int labeled = 0;
  for (const auto& [qid, ranking] : dataset.rankings) {
    Row row{qid, std::nullopt,
            QueryUtilityPredicted(metric, ranking, dataset.predicted)};
    if (dataset.IsLabeled(qid)) {
      row.truth = QueryUtilityTrue(metric, ranking, dataset.truth);
      sum_true += *row.truth;
      ++labeled;
    }
    sum_pred += row.predicted;
    rows.push_back(std::move(row));
  }
  const int total = static_cast<int>(rows.size());
  const std::optional<double> mean_true =
      labeled > 0 ? std::optional<double>(sum_true / labeled) : std::nullopt;
  const double mean_pred = total > 0 ? sum_pred / total : 0.0;

  switch (format) {
    case Format::kText:
      fmt::print(out, "metric {}  queries {}  labeled {}\n", metric.Name(),
                 total, labeled);
      fmt::print(out, "{:<24} {:>12} {:>12}\n", "query", "true", "predicted");
      for (const auto& r : rows) {
        fmt::print(out, "{:<24} {:>12} {:>12}\n", r.id,
                   r.truth ? Num(*r.truth) : "-", Num(r.predicted));
      }
      fmt::print(out, "{:<24} {:>12} {:>12}\n", "mean",
                 labeled > 0 ? Num(sum_true / labeled) : "-", Num(mean_pred));
      break;
    case Format::kCsv:
      fmt::print(out, "query_id,true,predicted\n");
      for (const auto& r : rows) {
        fmt::print(out, "{},{},{:.17g}\n", r.id,
                   r.truth ? fmt::format("{:.17g}", *r.truth) : "",
                   r.predicted);
      }
      break;
    case Format::kJson: {
      Json j;
      j["metric"] = metric.Name();
      j["gain"] = GainName(metric.gain);
      j["queries"] = Json::array();
      for (const auto& r : rows) {
        Json q;
        q["query_id"] = r.id;
        q["true"] = r.truth ? Json(*r.truth) : Json(nullptr);
        q["predicted"] = r.predicted;
        j["queries"].push_back(q);
      }
      j["labeled"] = labeled;
      j["mean_true"] = mean_true ? Json(*mean_true) : Json(nullptr);
      j["mean_predicted"] = mean_pred;
      out << j.dump(2) << "\n";
      break;
    }
  }
  return kExitOk;
}

int CmdCi(const Options& o, const CLI::App& cmd, std::ostream& out,
          std::ostream& err) {
  const Format format = ParseFormat(o.format);
  CheckAlpha(o.alpha);
  const MetricSpec metric = Metric(o);
  Method method = Method::kCrc;
  try {
    method = ParseMethod(o.method);
  } catch (const Error& e) {
    throw Error(ErrorCode::kUsage, e.what());
  }
  for (const char* flag : {"--batches", "--batch-size", "--per-query",
                           "--calibration"}) {
    if (method != Method::kCrc && cmd.count(flag) > 0) {
      throw Error(ErrorCode::kUsage,
                  fmt::format("{} only applies to --method crc", flag));
    }
  }
  if (method != Method::kBootstrap && cmd.count("--resamples") > 0) {
    throw Error(ErrorCode::kUsage,
                "--resamples only applies to --method bootstrap");
  }
  const Prepared p = PrepareSplit(o, err);
  const std::set<QueryId> labeled(p.labeled.begin(), p.labeled.end());

  switch (method) {
    case Method::kBootstrap: {
      std::vector<double> values;
      for (const auto& q : p.labeled) {
        values.push_back(
            QueryUtilityTrue(metric, p.dataset.Ranking(q), p.dataset.truth));
      }
      BootstrapOptions options;
      options.alpha = o.alpha;
      options.resamples = o.resamples;
      options.seed = o.seed;
      options.threads = o.threads;
      PrintReport(BootstrapCi(values, options), format, out);
      return kExitOk;
    }
    case Method::kPpi: {
      std::set<QueryId> all = labeled;
      all.insert(p.split.test_queries.begin(), p.split.test_queries.end());
      PrintReport(PpiCi(PpiEstimateForDataset(metric, p.dataset, labeled, all),
                        o.alpha),
                  format, out);
      return kExitOk;
    }
    case Method::kCrc:
      break;
  }

  if (p.split.test_queries.empty()) {
    throw Error(ErrorCode::kEmptyQuerySet, "the test split is empty");
  }
  const CrcCalibration calibration =
      o.calibration.empty()
          ? CalibrateFromOptions(o, p)
          : CrcCalibration::Deserialize(ReadFile(o.calibration));
  if (!o.per_query) {
    PrintReport(CrcCi(metric, p.split.test_queries, p.dataset, calibration),
                format, out);
    return kExitOk;
  }

  std::vector<CiReport> reports;
  for (const auto& q : p.split.test_queries) {
    reports.push_back(CrcCi(metric, {q}, p.dataset, calibration));
  }
  std::vector<QueryId> ids(p.split.test_queries.begin(),
                           p.split.test_queries.end());
  switch (format) {
    case Format::kText:
      fmt::print(out, "lambda_low {:.10g}  lambda_high {:.10g}\n",
                 calibration.lambda_low, calibration.lambda_high);
      fmt::print(out, "{:<24} {:>12} {:>12} {:>12} {:>12}\n", "query",
                 "predicted", "lower", "upper", "width");
      for (std::size_t i = 0; i < reports.size(); ++i) {
        const CiReport& r = reports[i];
        fmt::print(out, "{:<24} {:>12} {:>12} {:>12} {:>12}\n", ids[i],
                   Num(r.estimate), Num(r.lower), Num(r.upper), Num(r.Width()));
      }
      break;
    case Format::kCsv:
      fmt::print(out, "query_id,predicted,lower,upper,width\n");
      for (std::size_t i = 0; i < reports.size(); ++i) {
        const CiReport& r = reports[i];
        fmt::print(out, "{},{:.17g},{:.17g},{:.17g},{:.17g}\n", ids[i],
                   r.estimate, r.lower, r.upper, r.Width());
      }
      break;
    case Format::kJson: {
      Json j;
      j["method"] = "crc";
      j["alpha"] = o.alpha;
      j["lambda_low"] = calibration.lambda_low;
      j["lambda_high"] = calibration.lambda_high;
      j["queries"] = Json::array();
      for (std::size_t i = 0; i < reports.size(); ++i) {
        const CiReport& r = reports[i];
        j["queries"].push_back({{"query_id", ids[i]},
                                {"predicted", r.estimate},
                                {"lower", r.lower},
                                {"upper", r.upper}});
      }
      out << j.dump(2) << "\n";
      break;
    }
  }
  return kExitOk;
}

int CmdCalibrate(const Options& o, std::ostream& out, std::ostream& err) {
  CheckAlpha(o.alpha);
  const Prepared p = PrepareSplit(o, err);
  const CrcCalibration calibration = CalibrateFromOptions(o, p);
  const std::string text = calibration.Serialize();
  if (o.out.empty()) {
    out << text;
  } else {
    WriteFile(o.out, text);
  }
  return kExitOk;
}

int CmdSweep(const Options& o, std::ostream& out, std::ostream& err) {
  CheckAlpha(o.alpha);
  if (!(o.split_ratio > 0.0 && o.split_ratio < 1.0)) {
    throw Error(ErrorCode::kUsage, "--split-ratio must be in (0, 1)");
  }
  SweepSettings settings;
  settings.metric = Metric(o);
  settings.alpha = o.alpha;
  settings.methods.clear();
  try {
    for (const auto& m : o.methods) settings.methods.push_back(ParseMethod(m));
  } catch (const Error& e) {
    throw Error(ErrorCode::kUsage, e.what());
  }
  settings.n_grid = o.n_grid;
  settings.beta_grid = o.beta_grid;
  settings.tau_grid = o.tau_grid;
  settings.repeats = o.repeats;
  settings.bootstrap_resamples = o.resamples;
  settings.crc_batches = o.batches;
  settings.crc_batch_size = o.batch_size;
  settings.seed = o.seed;
  settings.threads = o.threads;
  for (double b : settings.beta_grid) {
    if (!(b >= 0.0 && b <= 1.0)) {
      throw Error(ErrorCode::kUsage, "--beta values must be in [0, 1]");
    }
  }
  for (double t : settings.tau_grid) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw Error(ErrorCode::kUsage, "--tau values must be in [0, 1]");
    }
  }
  if (settings.repeats < 1) {
    throw Error(ErrorCode::kUsage, "--repeats must be >= 1");
  }
  const Dataset dataset = LoadSource(o);
  const Split split = SplitDataset(dataset, o.split_ratio, std::nullopt, o.seed);
  for (const auto& w : split.warnings) fmt::print(err, "warning: {}\n", w);
  const auto rows = RunSweep(dataset, split, settings);
  const auto aggregates = Aggregate(rows);
  if (o.out.empty()) {
    out << SweepRowsCsv(rows);
    return kExitOk;
  }
  const std::filesystem::path dir(o.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo,
                fmt::format("cannot create '{}': {}", o.out, ec.message()));
  }
  WriteFile(dir / "runs.csv", SweepRowsCsv(rows));
  WriteFile(dir / "summary.csv", AggregatesCsv(aggregates));
  out << AggregatesCsv(aggregates);
  return kExitOk;
}

int CmdRunPlan(const Options& o, const CLI::App& cmd, std::ostream& out,
               std::ostream& err) {
  ExperimentPlan plan = ParsePlan(ReadFile(o.plan));
  if (!o.out.empty()) plan.output_dir = o.out;
  if (cmd.count("--threads") > 0) plan.sweep.threads = o.threads;
  const PlanResult result = RunPlan(plan);
  for (const auto& f : result.failures) fmt::print(err, "failure: {}\n", f);
  out << AggregatesCsv(result.aggregates);
  return kExitOk;
}

int CmdSynth(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw Error(ErrorCode::kUsage, "--out is required");
  const Dataset dataset = Generate(MakeSynthConfig(o.synth, o.seed));
  const std::filesystem::path dir(o.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo,
                fmt::format("cannot create '{}': {}", o.out, ec.message()));
  }
  WriteFile(dir / "run.txt", WriteRun(dataset.rankings));
  WriteFile(dir / "qrels.txt", WriteQrels(dataset.truth));
  WriteFile(dir / "dists.jsonl", WriteDists(dataset.predicted));
  fmt::print(out, "wrote {} queries to {}\n", dataset.rankings.size(),
             dir.string());
  return kExitOk;
}

}  // namespace

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCalibrationInfeasible:
    case ErrorCode::kTooFewBatches:
      return kExitCalibration;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidAlpha:
    case ErrorCode::kInvalidLambda:
    case ErrorCode::kInvalidLambdas:
    case ErrorCode::kInvalidRank:
    case ErrorCode::kUsage:
      return kExitUsage;
    default:
      return kExitData;
  }
}

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  Options o;
  CLI::App app{"Confidence intervals for IR evaluation with predicted labels",
               "relci"};
  app.set_config("--config", "", "Read options from an INI or TOML file");
  app.require_subcommand(1);

  auto* evaluate = app.add_subcommand(
      "evaluate", "Per-query true and predicted utilities");
  AddCommonOptions(evaluate, o);
  AddSourceOptions(evaluate, o);
  AddSynthOptions(evaluate, o);
  evaluate->add_option("--seed", o.seed, "Seed for --synthetic data");

  const auto add_split_options = [&o](CLI::App* cmd) {
    cmd->add_option("--alpha", o.alpha, "Miscoverage level")
        ->capture_default_str();
    cmd->add_option("--seed", o.seed, "Master seed")->capture_default_str();
    cmd->add_option("--split-ratio", o.split_ratio,
                    "Validation share of the labeled queries")
        ->capture_default_str();
  };
  const auto add_crc_options = [&o](CLI::App* cmd) {
    cmd->add_option("--batches", o.batches, "Number of calibration batches M")
        ->capture_default_str();
    cmd->add_option("--batch-size", o.batch_size,
                    "Queries per batch (0: number of labeled queries)")
        ->capture_default_str();
    cmd->add_flag("--per-query", o.per_query,
                  "Calibrate on singleton batches for per-query intervals");
    cmd->add_option("--n-labeled", o.n_labeled,
                    "Use a seeded sample of this many validation queries "
                    "(0: all)")
        ->capture_default_str();
    cmd->add_option("--beta", o.beta, "Adversarial bias applied to predictions");
    cmd->add_option("--tau", o.tau, "Oracle mixture applied to predictions");
  };

  auto* ci = app.add_subcommand("ci", "Confidence interval for the mean utility");
  AddCommonOptions(ci, o);
  AddSourceOptions(ci, o);
  AddSynthOptions(ci, o);
  add_split_options(ci);
  add_crc_options(ci);
  ci->add_option("--method", o.method, "bootstrap, ppi or crc")
      ->capture_default_str();
  ci->add_option("--resamples", o.resamples, "Bootstrap resamples")
      ->capture_default_str();
  ci->add_option("--calibration", o.calibration,
                 "Use a saved calibration instead of calibrating");
  ci->add_option("--threads", o.threads, "Worker threads")
      ->capture_default_str();

  auto* calibrate = app.add_subcommand(
      "calibrate", "Calibrate CRC lambdas and print the calibration record");
  AddCommonOptions(calibrate, o);
  AddSourceOptions(calibrate, o);
  AddSynthOptions(calibrate, o);
  add_split_options(calibrate);
  add_crc_options(calibrate);
  calibrate->add_option("--out", o.out, "Write the record to this file");

  auto* sweep = app.add_subcommand(
      "sweep", "Monte-Carlo width and coverage over n, beta and tau grids");
  AddCommonOptions(sweep, o);
  AddSourceOptions(sweep, o);
  AddSynthOptions(sweep, o);
  add_split_options(sweep);
  sweep->add_option("--n-labeled", o.n_grid, "Grid of labeled-set sizes")
      ->delimiter(',');
  sweep->add_option("--beta", o.beta_grid, "Grid of bias levels")
      ->delimiter(',');
  sweep->add_option("--tau", o.tau_grid, "Grid of oracle levels")
      ->delimiter(',');
  sweep->add_option("--methods", o.methods, "Methods to run")->delimiter(',');
  sweep->add_option("--repeats", o.repeats)->capture_default_str();
  sweep->add_option("--resamples", o.resamples, "Bootstrap resamples")
      ->capture_default_str();
  sweep->add_option("--batches", o.batches, "CRC calibration batches M")
      ->capture_default_str();
  sweep->add_option("--batch-size", o.batch_size,
                    "CRC batch size (0: n)")
      ->capture_default_str();
  sweep->add_option("--threads", o.threads, "Worker threads (0: all cores)")
      ->capture_default_str();
  sweep->add_option("--out", o.out,
                    "Write runs.csv and summary.csv to this directory");

  auto* run_plan = app.add_subcommand("run-plan", "Execute an experiment plan");
  run_plan->add_option("plan", o.plan, "Plan file (JSON)")->required();
  run_plan->add_option("--out", o.out, "Override the plan's output directory");
  run_plan->add_option("--threads", o.threads, "Worker threads (0: all cores)");

  auto* synth = app.add_subcommand(
      "synth", "Write a synthetic run, qrels and dists to a directory");
  AddSynthOptions(synth, o);
  synth->add_option("--seed", o.seed)->capture_default_str();
  synth->add_option("--out", o.out, "Output directory")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*evaluate) return CmdEvaluate(o, out);
    if (*ci) return CmdCi(o, *ci, out, err);
    if (*calibrate) return CmdCalibrate(o, out, err);
    if (*sweep) return CmdSweep(o, out, err);
    if (*run_plan) return CmdRunPlan(o, *run_plan, out, err);
    if (*synth) return CmdSynth(o, out);
  } catch (const Error& e) {
    fmt::print(err, "error ({}): {}\n", ErrorCodeName(e.code()), e.what());
    return ExitCodeFor(e.code());
  }
  return kExitUsage;
}

}  // namespace relci::cli
