#ifndef RELCI_CRC_CI_H_
#define RELCI_CRC_CI_H_

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "relci/ci_report.h"
#include "relci/metrics.h"
#include "relci/relevance_model.h"

namespace relci {

// Perturbation strength in (-1, 1). Positive values move predicted mass
// upward (optimistic), negative values downward (pessimistic).
class Lambda {
 public:
  // Throws kInvalidLambda unless -1 < value < 1.
  explicit Lambda(double value);
  double value() const { return value_; }

 private:
  double value_;
};

// Calibration searches lambda over [-kLambdaLimit, kLambdaLimit].
inline constexpr double kLambdaLimit = 1.0 - 1e-8;
inline constexpr double kLambdaTolerance = 1e-6;
inline constexpr double kLambdaNudge = 1e-9;

// Removes |lambda| probability mass from the bottom labels (lambda >= 0) or
// from the top labels (lambda < 0), clamping each label at zero so that any
// remainder spills into the next label, then renormalizes. `out` must have
// the same length as `probs`. No validation; the caller guarantees
// |lambda| < 1 and a valid distribution.
void PerturbInto(std::span<const double> probs, double lambda,
                 std::span<double> out);

RelevanceDistribution PerturbDistribution(const RelevanceDistribution& dist,
                                          Lambda lambda);

// Expected gain under the perturbed distribution.
double MuCrc(const MetricSpec& spec, const RelevanceDistribution& dist,
             Lambda lambda);

// Mean over `queries` of sum_d weight(rank(d)) * MuCrc(d, lambda).
double UtilityCrc(const MetricSpec& spec, const std::set<QueryId>& queries,
                  const Dataset& dataset, Lambda lambda);

struct CrcInterval {
  double low = 0.0;
  double high = 0.0;
};

// [UtilityCrc(lambda_low), UtilityCrc(lambda_high)]. Throws kInvalidLambdas
// unless lambda_low < lambda_high.
CrcInterval Interval(const MetricSpec& spec, const std::set<QueryId>& queries,
                     const Dataset& dataset, Lambda lambda_low,
                     Lambda lambda_high);

// Per-query data needed to evaluate perturbed utilities quickly: only the
// documents inside the cutoff are kept, with their rank weights, gains and
// predicted probabilities. Immutable after construction.
class PreparedQueries {
 public:
  // Throws kInvalidDataset when a ranked document lacks a distribution.
  PreparedQueries(const MetricSpec& spec, const Dataset& dataset,
                  std::span<const QueryId> query_ids);

  int size() const { return static_cast<int>(ids_.size()); }
  const QueryId& id(int i) const { return ids_[i]; }
  int num_labels() const { return num_labels_; }

  // Perturbed predicted utility of query i. lambda = 0 gives the plain
  // predicted utility.
  double CrcUtility(int i, double lambda) const;
  double PredictedUtility(int i) const { return predicted_[i]; }

  bool IsLabeled(int i) const { return labeled_[i]; }
  // Throws kUnlabeledQuery for unlabeled queries.
  double TrueUtility(int i) const;

 private:
  std::vector<QueryId> ids_;
  int num_labels_ = 0;
  std::vector<double> gains_;          // per label
  std::vector<std::size_t> offsets_;   // doc range per query, size()+1
  std::vector<double> weights_;        // per kept document
  std::vector<double> probs_;          // per kept document * num_labels
  std::vector<double> predicted_;
  std::vector<double> true_utility_;
  std::vector<bool> labeled_;
};

struct CalibrationBatch {
  std::vector<QueryId> queries;  // multiset; duplicates allowed
};

// M batches of `batch_size` queries drawn uniformly with replacement.
struct BootstrapBatching {
  int count = 10'000;
  int batch_size = 0;
};
// One singleton batch per labeled query, for per-query intervals.
struct PerQueryBatching {};
using BatchMode = std::variant<BootstrapBatching, PerQueryBatching>;

// Throws kNoCalibrationData for an empty labeled set. Bootstrap batch b is
// drawn from an Rng seeded with DeriveSeed(seed, b).
std::vector<CalibrationBatch> BuildBatches(std::span<const QueryId> labeled,
                                           const BatchMode& mode,
                                           std::uint64_t seed);

struct CrcCalibration {
  double lambda_high = 0.0;
  double lambda_low = 0.0;
  double alpha = 0.05;
  int num_batches = 0;
  double achieved_loss_high = 0.0;
  double achieved_loss_low = 0.0;

  double Threshold() const;

  // One JSON object; reals printed with 17 significant digits.
  std::string Serialize() const;
  // Throws kParse on malformed text.
  static CrcCalibration Deserialize(std::string_view text);
};

// Per-bound empirical-risk bound (1/2)(alpha - (1 - alpha) / M).
double CalibrationThreshold(double alpha, int num_batches);

// Smallest M for which the threshold is positive.
int MinimumBatches(double alpha);

// Dual calibration by two independent binary searches:
//   lambda_high = min{l : (1/M) sum_i 1[U_crc(B_i, l) < U(B_i)] < t}
//   lambda_low  = max{l : (1/M) sum_i 1[U_crc(B_i, l) > U(B_i)] < t}
// with t = CalibrationThreshold(alpha, M), searched over
// [-kLambdaLimit, kLambdaLimit] to kLambdaTolerance, keeping the feasible
// end of the bracket.
//
// If the two searches cross, both bounds are feasible on
// [lambda_high, lambda_low]; lambda_high is moved to the point of that range
// closest to zero and lambda_low is placed kLambdaNudge below it.
//
// Throws kInvalidAlpha, kTooFewBatches (threshold not positive),
// kCalibrationInfeasible (a bound cannot be met even at the lambda limit),
// kUnlabeledQuery for batches that reference unlabeled queries.
CrcCalibration Calibrate(const MetricSpec& spec,
                         std::span<const CalibrationBatch> batches,
                         const Dataset& dataset, double alpha);

// Same as above over query indices into `prepared`.
CrcCalibration Calibrate(const PreparedQueries& prepared,
                         std::span<const std::vector<int>> batches,
                         double alpha);

// Fraction of batches whose true utility lies outside the calibrated
// interval.
double CalibrationMiscoverage(const PreparedQueries& prepared,
                              std::span<const std::vector<int>> batches,
                              const CrcCalibration& calibration);

// Interval over `targets` with the calibrated lambdas. A singleton target set
// gives a per-query interval. The estimate is the unperturbed prediction.
CiReport CrcCi(const MetricSpec& spec, const std::set<QueryId>& targets,
               const Dataset& dataset, const CrcCalibration& calibration);

}  // namespace relci

#endif  // RELCI_CRC_CI_H_
