#ifndef RELCI_EXPERIMENT_H_
#define RELCI_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relci/metrics.h"
#include "relci/relevance_model.h"
#include "relci/synthetic_lab.h"

namespace relci {

enum class Method { kBootstrap, kPpi, kCrc };

std::string_view MethodName(Method method);
Method ParseMethod(std::string_view name);

struct SweepSettings {
  MetricSpec metric;
  double alpha = 0.05;
  std::vector<Method> methods = {Method::kBootstrap, Method::kPpi,
                                 Method::kCrc};
  // The sweep runs over the Cartesian product of the three grids.
  std::vector<int> n_grid = {10, 20, 40, 80};
  std::vector<double> beta_grid = {0.0};
  std::vector<double> tau_grid = {0.0};
  int repeats = 500;
  int bootstrap_resamples = 10'000;
  int crc_batches = 2'000;
  int crc_batch_size = 0;  // 0: use n
  std::uint64_t seed = 0;
  int threads = 1;
};

// One CI evaluation. `covered` is 1[truth in [low, high]] where truth is the
// true utility averaged over the test queries. Failed runs carry the error
// name in `status` and NaN numbers.
struct SweepRow {
  Method method = Method::kBootstrap;
  int n = 0;
  double beta = 0.0;
  double tau = 0.0;
  int repeat = 0;
  double width = 0.0;
  bool covered = false;
  double low = 0.0;
  double high = 0.0;
  double truth = 0.0;
  std::string status = "ok";
};

// For every grid point and repeat: draws n labeled queries from the
// validation split without replacement, builds each method's interval and
// scores it against the true test utility. The labeled draw depends only on
// (seed, n, repeat), so methods and beta/tau points share it. Rows are
// ordered by (method, n, beta, tau, repeat) regardless of `threads`.
std::vector<SweepRow> RunSweep(const Dataset& dataset, const Split& split,
                               const SweepSettings& settings);

struct SweepAggregate {
  Method method = Method::kBootstrap;
  int n = 0;
  double beta = 0.0;
  double tau = 0.0;
  int runs = 0;
  int failures = 0;
  double mean_width = 0.0;
  double width_p025 = 0.0;  // 95% prediction band of the width
  double width_p975 = 0.0;
  double coverage = 0.0;
  double coverage_lo = 0.0;  // p +/- 1.96 sqrt(p (1 - p) / runs)
  double coverage_hi = 0.0;
};

// Derived purely from the rows; failed runs are counted, not averaged.
std::vector<SweepAggregate> Aggregate(const std::vector<SweepRow>& rows);

// Header: method,n,beta,tau,repeat,width,covered,low,high,truth,status
std::string SweepRowsCsv(const std::vector<SweepRow>& rows);
// Header: method,n,beta,tau,runs,failures,mean_width,width_p025,width_p975,
//         coverage,coverage_lo,coverage_hi
std::string AggregatesCsv(const std::vector<SweepAggregate>& aggregates);

struct PerQueryRow {
  double tau = 0.0;
  QueryId query_id;
  double low = 0.0;
  double high = 0.0;
  double truth = 0.0;
  double predicted = 0.0;
  bool covered = false;
};

// Per-query CRC intervals on the test split, calibrated on singleton batches
// of the validation queries (all of them, or a seeded draw of `n_labeled`).
// Rows are sorted by truth descending, then query id.
std::vector<PerQueryRow> RunPerQuery(const Dataset& dataset, const Split& split,
                                     const MetricSpec& metric, double alpha,
                                     double tau, std::optional<int> n_labeled,
                                     std::uint64_t seed);

// Header: tau,query_id,low,high,truth,predicted,covered
std::string PerQueryCsv(const std::vector<PerQueryRow>& rows);

struct ExperimentPlan {
  std::string name = "plan";
  // Either a synthetic source or TREC-style files.
  std::optional<SynthConfig> synth;
  std::filesystem::path run_path;
  std::filesystem::path qrels_path;
  std::filesystem::path dists_path;
  int max_label = 3;
  double split_ratio = 0.5;
  SweepSettings sweep;
  // Tau values for the per-query dump; empty disables it.
  std::vector<double> per_query_taus = {0.0, 0.5, 1.0};
  std::filesystem::path output_dir = "out";
};

// Desk-scale defaults: 200 synthetic queries with 100 documents each on a
// 0..3 scale, 500 repeats, 2,000 CRC batches.
ExperimentPlan DefaultPlan();

// JSON object; absent keys keep DefaultPlan() values. Throws kParse.
ExperimentPlan ParsePlan(std::string_view json_text);

struct PlanResult {
  std::vector<SweepRow> rows;
  std::vector<SweepAggregate> aggregates;
  std::vector<PerQueryRow> per_query;
  std::vector<std::string> failures;
};

// Runs the sweep and the per-query dump, writing runs.csv, summary.csv and
// per_query.csv into plan.output_dir. Failures at a grid point are recorded
// and the plan continues.
PlanResult RunPlan(const ExperimentPlan& plan);

// Generates the synthetic dataset or reads the plan's run, qrels and dists.
Dataset LoadPlanDataset(const ExperimentPlan& plan);

}  // namespace relci

#endif  // RELCI_EXPERIMENT_H_
