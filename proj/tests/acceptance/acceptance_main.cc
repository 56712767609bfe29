// Acceptance gate. Runs every criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Exit status is non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cli/commands.h"
#include "relci/corpus_io.h"
#include "relci/crc_ci.h"
#include "relci/errors.h"
#include "relci/experiment.h"
#include "relci/metrics.h"
#include "relci/ppi_ci.h"
#include "relci/random.h"
#include "relci/synthetic_lab.h"
#include "support/oracles.h"

namespace relci {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Lambda grid -0.99, -0.98, ..., 0.99.
std::vector<double> LambdaGrid() {
  std::vector<double> grid;
  for (int i = -99; i <= 99; ++i) grid.push_back(i / 100.0);
  return grid;
}

// 10,000 distributions over 2..6 labels: half dense, half with exact zeros.
std::vector<std::vector<double>> TestDistributions(std::uint64_t seed,
                                                   double floor) {
  Rng rng(seed);
  std::vector<std::vector<double>> out;
  for (int i = 0; i < 10'000; ++i) {
    const int k = 2 + static_cast<int>(rng.Index(5));
    if (floor > 0.0 || i % 2 == 0) {
      out.push_back(testing::RandomDistribution(rng, k, floor));
    } else {
      out.push_back(testing::RandomSparseDistribution(rng, k));
    }
  }
  return out;
}

Outcome PerturbationOracle() {
  const auto start = Clock::now();
  const auto grid = LambdaGrid();
  double worst = 0.0;
  long cases = 0;
  for (const auto& probs : TestDistributions(1, 0.0)) {
    const RelevanceDistribution dist(probs);
    for (double lambda : grid) {
      const auto got = PerturbDistribution(dist, Lambda(lambda));
      const auto want = testing::BruteForcePerturb(probs, lambda);
      for (std::size_t r = 0; r < probs.size(); ++r) {
        worst = std::max(worst, std::abs(got[static_cast<int>(r)] - want[r]));
      }
      ++cases;
    }
  }
  const double secs = Seconds(start);
  return {worst <= 1e-9 && secs < 60.0,
          fmt::format("max |diff| {:.3g} over {} (dist, lambda) pairs in {:.1f} s",
                      worst, cases, secs)};
}

Outcome MuIdentityAndLimits() {
  const MetricSpec spec = ParseMetric("dcg@10");
  double worst_identity = 0.0;
  double worst_limit = 0.0;
  for (const auto& probs : TestDistributions(2, 1e-3)) {
    const RelevanceDistribution dist(probs);
    const int max_label = dist.size() - 1;
    worst_identity = std::max(
        worst_identity, std::abs(MuCrc(spec, dist, Lambda(0.0)) - ExpectedGain(spec, dist)));
    worst_limit = std::max(
        worst_limit, std::abs(MuCrc(spec, dist, Lambda(0.999)) - Gain(spec, max_label)));
    worst_limit = std::max(
        worst_limit, std::abs(MuCrc(spec, dist, Lambda(-0.999)) - Gain(spec, 0)));
  }
  return {worst_identity <= 1e-12 && worst_limit <= 1e-3,
          fmt::format("max |mu(0) - mu_hat| {:.3g}, max limit error {:.3g}",
                      worst_identity, worst_limit)};
}

Outcome Monotonicity() {
  const auto grid = LambdaGrid();
  int violations = 0;
  for (const char* metric : {"dcg@10", "prec@10"}) {
    const MetricSpec spec = ParseMetric(metric);
    for (const auto& probs : TestDistributions(3, 0.0)) {
      const RelevanceDistribution dist(probs);
      double previous = -std::numeric_limits<double>::infinity();
      for (double lambda : grid) {
        const double mu = MuCrc(spec, dist, Lambda(lambda));
        if (mu < previous) ++violations;
        previous = mu;
      }
    }
  }
  return {violations == 0,
          fmt::format("{} violations over 2 metrics x 10000 distributions x 199 lambdas",
                      violations)};
}

Outcome PpiHandCheck() {
  const std::vector<double> true_u = {3, 5};
  const std::vector<double> pred_labeled = {2, 4};
  const std::vector<double> pred_all = {2, 4, 6, 8};
  const CiReport r = PpiCi(ComputePpiEstimate(true_u, pred_labeled, pred_all), 0.05);
  const double half = r.Width() / 2.0;
  return {std::abs(r.estimate - 6.0) <= 1e-12 && std::abs(half - 2.5307) <= 1e-3,
          fmt::format("estimate {:.6f}, half-width {:.6f}", r.estimate, half)};
}

const SweepAggregate* Find(const std::vector<SweepAggregate>& aggs, Method m,
                           int n, double beta = 0.0) {
  for (const auto& a : aggs) {
    if (a.method == m && a.n == n && a.beta == beta) return &a;
  }
  return nullptr;
}

// Synthetic world shared by the Monte-Carlo criteria: the default plan with
// 4,000 queries so that the 2,000-query test split keeps the target utility
// stable while n labeled queries are drawn from the validation half.
ExperimentPlan CoveragePlan() {
  ExperimentPlan plan = DefaultPlan();
  plan.synth->num_queries = 4000;
  return plan;
}

Outcome Coverage() {
  const auto start = Clock::now();
  const ExperimentPlan plan = CoveragePlan();
  const Dataset dataset = LoadPlanDataset(plan);
  const Split split = SplitDataset(dataset, plan.split_ratio, std::nullopt, plan.sweep.seed);
  const auto aggs = Aggregate(RunSweep(dataset, split, plan.sweep));
  const double secs = Seconds(start);

  std::string table;
  for (Method m : plan.sweep.methods) {
    table += fmt::format(" {}", MethodName(m));
    for (int n : plan.sweep.n_grid) table += fmt::format(" {:.3f}", Find(aggs, m, n)->coverage);
    table += ";";
  }
  const int largest = plan.sweep.n_grid.back();
  bool largest_ok = true;
  for (Method m : plan.sweep.methods) {
    largest_ok = largest_ok && Find(aggs, m, largest)->coverage >= 0.93;
  }
  // Some grid point where PPI and CRC both reach 0.93 but bootstrap does not.
  bool earlier = false;
  for (int n : plan.sweep.n_grid) {
    earlier = earlier || (Find(aggs, Method::kPpi, n)->coverage >= 0.93 &&
                          Find(aggs, Method::kCrc, n)->coverage >= 0.93 &&
                          Find(aggs, Method::kBootstrap, n)->coverage < 0.93);
  }
  return {largest_ok && earlier && secs < 900.0,
          fmt::format("coverage by n{}  all>=0.93 at n={}: {}; PPI and CRC ahead of "
                      "bootstrap somewhere: {}; {:.0f} s",
                      table, largest, largest_ok ? "yes" : "no", earlier ? "yes" : "no",
                      secs)};
}

Outcome WidthOrdering() {
  ExperimentPlan plan = CoveragePlan();
  plan.synth->annotator_sharpness = 8.0;
  plan.sweep.methods = {Method::kBootstrap, Method::kCrc};
  plan.sweep.n_grid = {80};
  plan.sweep.beta_grid = {0.0, 1.0};
  const Dataset dataset = LoadPlanDataset(plan);
  const Split split = SplitDataset(dataset, plan.split_ratio, std::nullopt, plan.sweep.seed);
  const auto aggs = Aggregate(RunSweep(dataset, split, plan.sweep));
  const auto* boot0 = Find(aggs, Method::kBootstrap, 80, 0.0);
  const auto* crc0 = Find(aggs, Method::kCrc, 80, 0.0);
  const auto* boot1 = Find(aggs, Method::kBootstrap, 80, 1.0);
  const auto* crc1 = Find(aggs, Method::kCrc, 80, 1.0);
  const bool pass = crc0->mean_width < boot0->mean_width &&
                    crc1->mean_width >= boot1->mean_width && crc1->coverage >= 0.93;
  return {pass, fmt::format("beta=0: crc {:.3f} vs bootstrap {:.3f}; beta=1: crc {:.3f} "
                            "vs bootstrap {:.3f}, crc coverage {:.3f}",
                            crc0->mean_width, boot0->mean_width, crc1->mean_width,
                            boot1->mean_width, crc1->coverage)};
}

Outcome OracleShrinkage() {
  const ExperimentPlan plan = DefaultPlan();
  const Dataset dataset = LoadPlanDataset(plan);
  const Split split = SplitDataset(dataset, plan.split_ratio, std::nullopt, plan.sweep.seed);
  std::map<QueryId, double> base;
  for (const auto& r : RunPerQuery(dataset, split, plan.sweep.metric, plan.sweep.alpha,
                                   0.0, std::nullopt, plan.sweep.seed)) {
    base[r.query_id] = r.high - r.low;
  }
  int failures = 0;
  double worst = 0.0;
  const auto oracle = RunPerQuery(dataset, split, plan.sweep.metric, plan.sweep.alpha,
                                  1.0, std::nullopt, plan.sweep.seed);
  for (const auto& r : oracle) {
    const double w0 = base.at(r.query_id);
    const double w1 = r.high - r.low;
    if (!(w1 < 0.05 * w0)) ++failures;
    if (w0 > 0.0) worst = std::max(worst, w1 / w0);
  }
  return {failures == 0 && !oracle.empty(),
          fmt::format("{} test queries, {} not shrunk below 5%, largest ratio {:.3g}",
                      oracle.size(), failures, worst)};
}

Outcome FeasibilityBoundary() {
  SynthConfig c;
  c.num_queries = 20;
  c.docs_per_query = 10;
  c.annotator_sharpness = SynthConfig::kPerfectAnnotator;  // all losses zero
  const Dataset dataset = Generate(c);
  const MetricSpec spec = ParseMetric("dcg@10");
  const auto ids = dataset.QueryIds();
  auto batches = BuildBatches(ids, PerQueryBatching{}, 0);

  std::string m19 = "succeeded";
  bool m19_ok = false;
  try {
    Calibrate(spec, std::span(batches).first(19), dataset, 0.05);
  } catch (const Error& e) {
    m19 = std::string(ErrorCodeName(e.code()));
    m19_ok = e.code() == ErrorCode::kTooFewBatches ||
             e.code() == ErrorCode::kCalibrationInfeasible;
  }
  std::string m20 = "failed";
  bool m20_ok = false;
  try {
    const CrcCalibration cal = Calibrate(spec, batches, dataset, 0.05);
    m20_ok = cal.achieved_loss_high == 0.0 && cal.achieved_loss_low == 0.0;
    m20 = fmt::format("succeeded with losses {} / {}", cal.achieved_loss_high,
                      cal.achieved_loss_low);
  } catch (const Error& e) {
    m20 = std::string(ErrorCodeName(e.code()));
  }
  return {m19_ok && m20_ok, fmt::format("M=19: {}; M=20: {}", m19, m20)};
}

Outcome CalibrationSoundness() {
  const MetricSpec spec = ParseMetric("dcg@10");
  const double alpha = 0.05;
  int checks = 0;
  int failures = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  SynthConfig c;
  c.num_queries = 300;
  c.annotator_noise = 0.2;
  const Dataset base = Generate(c);
  for (double beta : {0.0, 0.5, 1.0}) {
    for (double tau : {0.0, 0.5}) {
      const Dataset d = TransformPredictions(base, beta, tau);
      const auto ids = d.QueryIds();
      const PreparedQueries prepared(spec, d, ids);
      std::vector<std::vector<std::vector<int>>> schemes;
      for (int size : {1, 10, 40}) {
        std::vector<std::vector<int>> batches(size == 1 ? prepared.size() : 2000);
        for (std::size_t b = 0; b < batches.size(); ++b) {
          if (size == 1) {
            batches[b] = {static_cast<int>(b)};
            continue;
          }
          Rng rng(DeriveSeed(17, b));
          for (int i = 0; i < size; ++i) {
            batches[b].push_back(static_cast<int>(rng.Index(prepared.size())));
          }
        }
        schemes.push_back(std::move(batches));
      }
      for (const auto& batches : schemes) {
        const int m = static_cast<int>(batches.size());
        const double bound = alpha - (1.0 - alpha) / m;
        const CrcCalibration cal = Calibrate(prepared, batches, alpha);
        const double miss = CalibrationMiscoverage(prepared, batches, cal);
        ++checks;
        if (!(miss < bound)) ++failures;
        worst_margin = std::min(worst_margin, bound - miss);
      }
    }
  }
  return {failures == 0, fmt::format("{} calibrations, {} at or above the bound, "
                                     "smallest margin {:.4f}",
                                     checks, failures, worst_margin)};
}

std::string Token(Rng& rng) {
  static const char kChars[] =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_.:/#";
  std::string s(1 + rng.Index(12), 'x');
  for (char& ch : s) ch = kChars[rng.Index(sizeof(kChars) - 1)];
  return s;
}

double FuzzReal(Rng& rng) {
  switch (rng.Index(4)) {
    case 0: return rng.Normal() * 1e3;
    case 1: return std::ldexp(rng.Uniform(), static_cast<int>(rng.Index(400)) - 200);
    case 2: return static_cast<double>(rng.Index(1000)) - 500.0;
    default: return -(1.0 + rng.Uniform()) * 1e-300;
  }
}

bool SameBits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Outcome IoRoundTrip() {
  Rng rng(10);
  std::vector<RunLine> run;
  std::vector<QrelLine> qrels;
  std::vector<DistLine> dists;
  for (int i = 0; i < 1000; ++i) {
    run.push_back({Token(rng), Token(rng), 1 + static_cast<int>(rng.Index(1000)),
                   FuzzReal(rng), Token(rng)});
    qrels.push_back({Token(rng), Token(rng), Token(rng), static_cast<int>(rng.Index(5))});
    dists.push_back({Token(rng) + "\"\\\t", Token(rng),
                     testing::RandomSparseDistribution(rng, 2 + static_cast<int>(rng.Index(4)))});
  }
  int mismatches = 0;

  const auto run1 = ParseRunLines(WriteRunLines(run));
  const auto run2 = ParseRunLines(WriteRunLines(run1));
  for (std::size_t i = 0; i < run.size(); ++i) {
    const bool same = run2[i].qid == run[i].qid && run2[i].docid == run[i].docid &&
                      run2[i].rank == run[i].rank && run2[i].tag == run[i].tag &&
                      SameBits(run2[i].score, run[i].score) && run1[i] == run2[i];
    mismatches += !same;
  }
  mismatches += WriteRunLines(run1) != WriteRunLines(run2);

  const auto qrels1 = ParseQrelLines(WriteQrelLines(qrels));
  const auto qrels2 = ParseQrelLines(WriteQrelLines(qrels1));
  mismatches += qrels1 != qrels || qrels2 != qrels;

  const auto dists1 = ParseDistLines(WriteDistLines(dists));
  const auto dists2 = ParseDistLines(WriteDistLines(dists1));
  for (std::size_t i = 0; i < dists.size(); ++i) {
    bool same = dists2[i].qid == dists[i].qid && dists2[i].docid == dists[i].docid &&
                dists2[i].probs.size() == dists[i].probs.size();
    for (std::size_t r = 0; same && r < dists[i].probs.size(); ++r) {
      same = SameBits(dists2[i].probs[r], dists[i].probs[r]);
    }
    mismatches += !same;
  }
  mismatches += WriteDistLines(dists1) != WriteDistLines(dists2);

  // The map-level formats used by the CLI.
  SynthConfig c;
  c.num_queries = 10;
  c.docs_per_query = 100;
  const Dataset d = Generate(c);
  mismatches += ParseRun(WriteRun(d.rankings)) != d.rankings;
  mismatches += ParseQrels(WriteQrels(d.truth), d.scale) != d.truth;
  mismatches += ParseDists(WriteDists(d.predicted), d.scale) != d.predicted;
  return {mismatches == 0,
          fmt::format("1000 lines per format plus a 1000-pair dataset, {} mismatches",
                      mismatches)};
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "relci");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::Run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string DirContents(const fs::path& dir) {
  std::string all;
  std::set<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) files.insert(entry.path());
  for (const auto& f : files) all += f.filename().string() + "\n" + ReadFile(f);
  return all;
}

Outcome CliDeterminism() {
  const fs::path root = fs::temp_directory_path() / "relci_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto at = [&](const std::string& name) { return (root / name).string(); };
  std::vector<std::string> differing;
  int commands = 0;

  const std::vector<std::string> synth_args = {"--num-queries", "60", "--docs-per-query",
                                               "30", "--annotator-noise", "0.2", "--seed", "4"};
  auto synth_a = synth_args;
  synth_a.insert(synth_a.begin(), {"synth", "--out", at("data_a")});
  auto synth_b = synth_args;
  synth_b.insert(synth_b.begin(), {"synth", "--out", at("data_b")});
  Cli(synth_a);
  Cli(synth_b);
  ++commands;
  if (DirContents(at("data_a")) != DirContents(at("data_b"))) differing.push_back("synth");

  const std::vector<std::string> src = {"--run", at("data_a/run.txt"), "--qrels",
                                        at("data_a/qrels.txt"), "--dists",
                                        at("data_a/dists.jsonl")};
  const auto with = [&](std::vector<std::string> head) {
    head.insert(head.end(), src.begin(), src.end());
    return head;
  };

  // Each variant list must produce identical stdout across all members.
  std::vector<std::pair<std::string, std::vector<std::vector<std::string>>>> cases = {
      {"evaluate text", {with({"evaluate"})}},
      {"evaluate json", {with({"evaluate", "--format", "json"})}},
      {"ci bootstrap",
       {with({"ci", "--method", "bootstrap", "--threads", "1"}),
        with({"ci", "--method", "bootstrap", "--threads", "4"})}},
      {"ci ppi", {with({"ci", "--method", "ppi", "--format", "csv"})}},
      {"ci crc", {with({"ci", "--method", "crc", "--format", "json"})}},
      {"ci crc per-query", {with({"ci", "--method", "crc", "--per-query"})}},
      {"calibrate", {with({"calibrate", "--batches", "500"})}},
      {"sweep",
       {with({"sweep", "--n-labeled", "5,10", "--repeats", "8", "--resamples", "300",
              "--batches", "200", "--beta", "0,1", "--threads", "1"}),
        with({"sweep", "--n-labeled", "5,10", "--repeats", "8", "--resamples", "300",
              "--batches", "200", "--beta", "0,1", "--threads", "4"})}},
  };
  for (const auto& [name, variants] : cases) {
    ++commands;
    std::vector<std::string> outputs;
    for (const auto& args : variants) {
      for (int run = 0; run < 2; ++run) {
        const CliResult r = Cli(args);
        outputs.push_back(fmt::format("{}\n{}", r.code, r.out));
      }
    }
    for (const auto& o : outputs) {
      if (o != outputs.front() || o.front() != '0') {
        differing.push_back(name);
        break;
      }
    }
  }

  WriteFile(at("plan.json"), fmt::format(R"({{
  "synth": {{"num_queries": 60, "docs_per_query": 20, "seed": 2}},
  "n_grid": [5, 10], "repeats": 6, "bootstrap_resamples": 200,
  "crc_batches": 100, "per_query_taus": [0, 1], "output_dir": "{}"
}})",
                                         at("plan_default_out")));
  ++commands;
  std::vector<std::string> plan_outputs;
  int index = 0;
  for (const char* threads : {"1", "1", "4", "4"}) {
    const std::string out_dir = at(fmt::format("plan_{}", index++));
    const CliResult r = Cli({"run-plan", at("plan.json"), "--out", out_dir, "--threads", threads});
    plan_outputs.push_back(fmt::format("{}\n{}\n{}", r.code, r.out,
                                       r.code == 0 ? DirContents(out_dir) : ""));
  }
  for (const auto& o : plan_outputs) {
    if (o != plan_outputs.front() || o.front() != '0') {
      differing.push_back("run-plan");
      break;
    }
  }
  fs::remove_all(root);

  std::string listed;
  for (const auto& d : differing) listed += (listed.empty() ? "" : ", ") + d;
  return {differing.empty(),
          fmt::format("{} commands run twice (and under 1 vs 4 threads where "
                      "applicable); differing or failing: {}",
                      commands, listed.empty() ? "none" : listed)};
}

}  // namespace
}  // namespace relci

int main() {
  using relci::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"perturbation oracle equivalence", relci::PerturbationOracle},
      {"mu_crc identity and limits", relci::MuIdentityAndLimits},
      {"mu_crc monotone in lambda", relci::Monotonicity},
      {"PPI worked example", relci::PpiHandCheck},
      {"coverage by labeled-set size", relci::Coverage},
      {"width ordering under bias", relci::WidthOrdering},
      {"per-query oracle shrinkage", relci::OracleShrinkage},
      {"calibration feasibility boundary", relci::FeasibilityBoundary},
      {"calibration-set soundness", relci::CalibrationSoundness},
      {"I/O round trips", relci::IoRoundTrip},
      {"CLI determinism", relci::CliDeterminism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, fmt::format("threw: {}", e.what())};
    }
    failed += !outcome.pass;
    fmt::print("{} [{:2}] {}: {}\n", outcome.pass ? "PASS" : "FAIL", i + 1,
               criteria[i].first, outcome.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
