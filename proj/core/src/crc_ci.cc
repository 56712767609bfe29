#include "relci/crc_ci.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "relci/errors.h"
#include "relci/random.h"

namespace relci {
namespace {

void CheckAlpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidAlpha,
                fmt::format("alpha must be in (0, 1), got {}", alpha));
  }
}

// Small fixed buffer for perturbed probabilities; scales beyond kInline
// labels fall back to the heap.
constexpr int kInline = 16;

class ProbBuffer {
 public:
  explicit ProbBuffer(int size) : size_(size) {
    if (size > kInline) heap_.resize(size);
  }
  std::span<double> span() {
    return size_ > kInline ? std::span<double>(heap_)
                           : std::span<double>(inline_.data(), size_);
  }

 private:
  int size_;
  std::array<double, kInline> inline_{};
  std::vector<double> heap_;
};

double BatchMean(std::span<const double> per_query,
                 const std::vector<int>& batch) {
  double sum = 0.0;
  for (int q : batch) sum += per_query[q];
  return sum / static_cast<double>(batch.size());
}

}  // namespace

Lambda::Lambda(double value) : value_(value) {
  if (!(value > -1.0 && value < 1.0)) {
    throw Error(ErrorCode::kInvalidLambda,
                fmt::format("lambda must be in (-1, 1), got {}", value));
  }
}

void PerturbInto(std::span<const double> probs, double lambda,
                 std::span<double> out) {
  const int k = static_cast<int>(probs.size());
  if (lambda == 0.0) {
    std::copy(probs.begin(), probs.end(), out.begin());
    return;
  }
  double total = 0.0;
  if (lambda > 0.0) {
    double below = 0.0;
    for (int r = 0; r < k; ++r) {
      const double removed = std::max(0.0, lambda - below);
      out[r] = std::max(0.0, probs[r] - removed);
      below += probs[r];
      total += out[r];
    }
  } else {
    const double magnitude = -lambda;
    double above = 0.0;
    for (int r = k - 1; r >= 0; --r) {
      const double removed = std::max(0.0, magnitude - above);
      out[r] = std::max(0.0, probs[r] - removed);
      above += probs[r];
      total += out[r];
    }
  }
  if (total > 0.0) {
    for (int r = 0; r < k; ++r) out[r] /= total;
    return;
  }
  // Everything was removed (only possible when the input sums to slightly
  // less than |lambda|). Return the limit: all mass on the last label that
  // had any.
  std::fill(out.begin(), out.end(), 0.0);
  if (lambda > 0.0) {
    for (int r = k - 1; r >= 0; --r) {
      if (probs[r] > 0.0) {
        out[r] = 1.0;
        return;
      }
    }
  } else {
    for (int r = 0; r < k; ++r) {
      if (probs[r] > 0.0) {
        out[r] = 1.0;
        return;
      }
    }
  }
}

RelevanceDistribution PerturbDistribution(const RelevanceDistribution& dist,
                                          Lambda lambda) {
  std::vector<double> out(dist.size());
  PerturbInto(dist.probs(), lambda.value(), out);
  return RelevanceDistribution(std::move(out));
}

double MuCrc(const MetricSpec& spec, const RelevanceDistribution& dist,
             Lambda lambda) {
  return ExpectedGain(spec, PerturbDistribution(dist, lambda));
}

double UtilityCrc(const MetricSpec& spec, const std::set<QueryId>& queries,
                  const Dataset& dataset, Lambda lambda) {
  if (queries.empty()) {
    throw Error(ErrorCode::kEmptyQuerySet, "perturbed utility of no queries");
  }
  const std::vector<QueryId> ids(queries.begin(), queries.end());
  const PreparedQueries prepared(spec, dataset, ids);
  double total = 0.0;
  for (int i = 0; i < prepared.size(); ++i) {
    total += prepared.CrcUtility(i, lambda.value());
  }
  return total / static_cast<double>(prepared.size());
}

CrcInterval Interval(const MetricSpec& spec, const std::set<QueryId>& queries,
                     const Dataset& dataset, Lambda lambda_low,
                     Lambda lambda_high) {
  if (!(lambda_low.value() < lambda_high.value())) {
    throw Error(ErrorCode::kInvalidLambdas,
                fmt::format("lambda_low {} must be below lambda_high {}",
                            lambda_low.value(), lambda_high.value()));
  }
  return {UtilityCrc(spec, queries, dataset, lambda_low),
          UtilityCrc(spec, queries, dataset, lambda_high)};
}

PreparedQueries::PreparedQueries(const MetricSpec& spec, const Dataset& dataset,
                                 std::span<const QueryId> query_ids)
    : ids_(query_ids.begin(), query_ids.end()),
      num_labels_(dataset.scale.num_labels()) {
  for (int r = 0; r < num_labels_; ++r) gains_.push_back(Gain(spec, r));
  offsets_.reserve(ids_.size() + 1);
  offsets_.push_back(0);
  for (const auto& qid : ids_) {
    const RankedList& ranking = dataset.Ranking(qid);
    int rank = 0;
    for (const auto& doc : ranking.doc_ids) {
      ++rank;
      auto it = dataset.predicted.find({qid, doc});
      if (it == dataset.predicted.end()) {
        throw Error(ErrorCode::kInvalidDataset,
                    fmt::format("query '{}' has no distribution for '{}'", qid,
                                doc));
      }
      if (rank > spec.cutoff_k) continue;
      if (it->second.size() != num_labels_) {
        throw Error(ErrorCode::kScale,
                    fmt::format("distribution for ('{}', '{}') has {} labels",
                                qid, doc, it->second.size()));
      }
      weights_.push_back(RankWeight(spec, rank));
      const auto probs = it->second.probs();
      probs_.insert(probs_.end(), probs.begin(), probs.end());
    }
    offsets_.push_back(weights_.size());
    predicted_.push_back(QueryUtilityPredicted(spec, ranking, dataset.predicted));
    const bool labeled = dataset.IsLabeled(qid);
    labeled_.push_back(labeled);
    true_utility_.push_back(
        labeled ? QueryUtilityTrue(spec, ranking, dataset.truth) : 0.0);
  }
}

double PreparedQueries::CrcUtility(int i, double lambda) const {
  if (lambda == 0.0) return predicted_[i];
  ProbBuffer buffer(num_labels_);
  std::span<double> perturbed = buffer.span();
  double total = 0.0;
  for (std::size_t d = offsets_[i]; d < offsets_[i + 1]; ++d) {
    const std::span<const double> probs(probs_.data() + d * num_labels_,
                                        num_labels_);
    PerturbInto(probs, lambda, perturbed);
    double mu = 0.0;
    for (int r = 0; r < num_labels_; ++r) mu += perturbed[r] * gains_[r];
    total += weights_[d] * mu;
  }
  return total;
}

double PreparedQueries::TrueUtility(int i) const {
  if (!labeled_[i]) {
    throw Error(ErrorCode::kUnlabeledQuery,
                fmt::format("query '{}' is not fully judged", ids_[i]));
  }
  return true_utility_[i];
}

std::vector<CalibrationBatch> BuildBatches(std::span<const QueryId> labeled,
                                           const BatchMode& mode,
                                           std::uint64_t seed) {
  if (labeled.empty()) {
    throw Error(ErrorCode::kNoCalibrationData,
                "calibration needs at least one labeled query");
  }
  std::vector<CalibrationBatch> batches;
  if (std::holds_alternative<PerQueryBatching>(mode)) {
    batches.reserve(labeled.size());
    for (const auto& q : labeled) batches.push_back({{q}});
    return batches;
  }
  const auto& boot = std::get<BootstrapBatching>(mode);
  const int size =
      boot.batch_size > 0 ? boot.batch_size : static_cast<int>(labeled.size());
  if (boot.count < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("batch count must be >= 1, got {}", boot.count));
  }
  batches.resize(boot.count);
  for (int b = 0; b < boot.count; ++b) {
    Rng rng(DeriveSeed(seed, static_cast<std::uint64_t>(b)));
    auto& queries = batches[b].queries;
    queries.reserve(size);
    for (int j = 0; j < size; ++j) {
      queries.push_back(labeled[rng.Index(labeled.size())]);
    }
  }
  return batches;
}

double CalibrationThreshold(double alpha, int num_batches) {
  return 0.5 * (alpha - (1.0 - alpha) / static_cast<double>(num_batches));
}

namespace {

// alpha - (1 - alpha) / M > 0, evaluated as alpha * M > 1 - alpha with a
// margin so that M = (1 - alpha) / alpha exactly is rejected despite
// rounding in the decimal alpha.
bool ThresholdPositive(double alpha, int num_batches) {
  return alpha * static_cast<double>(num_batches) > (1.0 - alpha) + 1e-9;
}

}  // namespace

int MinimumBatches(double alpha) {
  CheckAlpha(alpha);
  int m = std::max(1, static_cast<int>(std::floor((1.0 - alpha) / alpha)));
  while (m > 1 && ThresholdPositive(alpha, m - 1)) --m;
  while (!ThresholdPositive(alpha, m)) ++m;
  return m;
}

double CrcCalibration::Threshold() const {
  return CalibrationThreshold(alpha, num_batches);
}

std::string CrcCalibration::Serialize() const {
  return fmt::format(
      "{{\"lambda_high\": {:.17g}, \"lambda_low\": {:.17g}, \"alpha\": {:.17g}, "
      "\"num_batches\": {}, \"achieved_loss_high\": {:.17g}, "
      "\"achieved_loss_low\": {:.17g}}}\n",
      lambda_high, lambda_low, alpha, num_batches, achieved_loss_high,
      achieved_loss_low);
}

CrcCalibration CrcCalibration::Deserialize(std::string_view text) {
  try {
    const auto json = nlohmann::json::parse(text);
    CrcCalibration c;
    c.lambda_high = json.at("lambda_high").get<double>();
    c.lambda_low = json.at("lambda_low").get<double>();
    c.alpha = json.at("alpha").get<double>();
    c.num_batches = json.at("num_batches").get<int>();
    c.achieved_loss_high = json.at("achieved_loss_high").get<double>();
    c.achieved_loss_low = json.at("achieved_loss_low").get<double>();
    Lambda(c.lambda_high);
    Lambda(c.lambda_low);
    if (!(c.lambda_low < c.lambda_high)) {
      throw Error(ErrorCode::kParse, "calibration has lambda_low >= lambda_high");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse,
                fmt::format("malformed calibration record: {}", e.what()));
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse,
                fmt::format("malformed calibration record: {}", e.what()));
  }
}

CrcCalibration Calibrate(const PreparedQueries& prepared,
                         std::span<const std::vector<int>> batches,
                         double alpha) {
  CheckAlpha(alpha);
  const int m = static_cast<int>(batches.size());
  if (m == 0) {
    throw Error(ErrorCode::kNoCalibrationData, "no calibration batches");
  }
  if (!ThresholdPositive(alpha, m)) {
    throw Error(ErrorCode::kTooFewBatches,
                fmt::format("alpha = {} needs at least {} batches, got {}",
                            alpha, MinimumBatches(alpha), m));
  }
  const double threshold = CalibrationThreshold(alpha, m);

  std::vector<char> used(prepared.size(), 0);
  for (const auto& batch : batches) {
    if (batch.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "empty calibration batch");
    }
    for (int q : batch) used[q] = 1;
  }
  std::vector<double> true_per_query(prepared.size(), 0.0);
  for (int q = 0; q < prepared.size(); ++q) {
    if (used[q]) true_per_query[q] = prepared.TrueUtility(q);
  }
  std::vector<double> true_batch(m);
  for (int b = 0; b < m; ++b) true_batch[b] = BatchMean(true_per_query, batches[b]);

  std::vector<double> crc_per_query(prepared.size(), 0.0);
  std::vector<double> crc_batch(m);
  // Per-query perturbed utilities are computed only at probed lambdas.
  auto evaluate = [&](double lambda) {
    for (int q = 0; q < prepared.size(); ++q) {
      if (used[q]) crc_per_query[q] = prepared.CrcUtility(q, lambda);
    }
    for (int b = 0; b < m; ++b) crc_batch[b] = BatchMean(crc_per_query, batches[b]);
  };
  auto loss_high = [&](double lambda) {
    evaluate(lambda);
    int misses = 0;
    for (int b = 0; b < m; ++b) misses += crc_batch[b] < true_batch[b];
    return static_cast<double>(misses) / m;
  };
  auto loss_low = [&](double lambda) {
    evaluate(lambda);
    int misses = 0;
    for (int b = 0; b < m; ++b) misses += crc_batch[b] > true_batch[b];
    return static_cast<double>(misses) / m;
  };

  // Upper bound: loss_high is non-increasing in lambda; keep the feasible
  // (upper) end of the bracket.
  double high;
  if (const double at_limit = loss_high(kLambdaLimit); at_limit >= threshold) {
    throw Error(ErrorCode::kCalibrationInfeasible,
                fmt::format("upper bound cannot be calibrated: loss {} at the "
                            "most optimistic lambda is not below {}",
                            at_limit, threshold));
  }
  if (loss_high(-kLambdaLimit) < threshold) {
    high = -kLambdaLimit;
  } else {
    double lo = -kLambdaLimit;
    double hi = kLambdaLimit;
    while (hi - lo > kLambdaTolerance) {
      const double mid = 0.5 * (lo + hi);
      (loss_high(mid) < threshold ? hi : lo) = mid;
    }
    high = hi;
  }

  // Lower bound: loss_low is non-decreasing in lambda; keep the feasible
  // (lower) end.
  double low;
  if (const double at_limit = loss_low(-kLambdaLimit); at_limit >= threshold) {
    throw Error(ErrorCode::kCalibrationInfeasible,
                fmt::format("lower bound cannot be calibrated: loss {} at the "
                            "most pessimistic lambda is not below {}",
                            at_limit, threshold));
  }
  if (loss_low(kLambdaLimit) < threshold) {
    low = kLambdaLimit;
  } else {
    double lo = -kLambdaLimit;
    double hi = kLambdaLimit;
    while (hi - lo > kLambdaTolerance) {
      const double mid = 0.5 * (lo + hi);
      (loss_low(mid) < threshold ? lo : hi) = mid;
    }
    low = lo;
  }

  if (low >= high) {
    // Both losses are below the threshold on [high, low]. Raising high and
    // lowering low keeps each feasible.
    high = std::clamp(0.0, high, low);
    low = high - kLambdaNudge;
  }

  CrcCalibration result;
  result.lambda_high = high;
  result.lambda_low = low;
  result.alpha = alpha;
  result.num_batches = m;
  result.achieved_loss_high = loss_high(high);
  result.achieved_loss_low = loss_low(low);
  return result;
}

CrcCalibration Calibrate(const MetricSpec& spec,
                         std::span<const CalibrationBatch> batches,
                         const Dataset& dataset, double alpha) {
  std::map<QueryId, int> index;
  for (const auto& batch : batches) {
    for (const auto& q : batch.queries) index.emplace(q, 0);
  }
  std::vector<QueryId> ids;
  ids.reserve(index.size());
  for (auto& [q, i] : index) {
    i = static_cast<int>(ids.size());
    ids.push_back(q);
  }
  const PreparedQueries prepared(spec, dataset, ids);
  std::vector<std::vector<int>> indexed;
  indexed.reserve(batches.size());
  for (const auto& batch : batches) {
    std::vector<int> members;
    members.reserve(batch.queries.size());
    for (const auto& q : batch.queries) members.push_back(index.at(q));
    indexed.push_back(std::move(members));
  }
  return Calibrate(prepared, indexed, alpha);
}

double CalibrationMiscoverage(const PreparedQueries& prepared,
                              std::span<const std::vector<int>> batches,
                              const CrcCalibration& calibration) {
  if (batches.empty()) {
    throw Error(ErrorCode::kNoCalibrationData, "no calibration batches");
  }
  std::vector<double> truth(prepared.size());
  std::vector<double> lows(prepared.size());
  std::vector<double> highs(prepared.size());
  for (int q = 0; q < prepared.size(); ++q) {
    truth[q] = prepared.TrueUtility(q);
    lows[q] = prepared.CrcUtility(q, calibration.lambda_low);
    highs[q] = prepared.CrcUtility(q, calibration.lambda_high);
  }
  int misses = 0;
  for (const auto& batch : batches) {
    const double u = BatchMean(truth, batch);
    misses += u < BatchMean(lows, batch) || u > BatchMean(highs, batch);
  }
  return static_cast<double>(misses) / static_cast<double>(batches.size());
}

CiReport CrcCi(const MetricSpec& spec, const std::set<QueryId>& targets,
               const Dataset& dataset, const CrcCalibration& calibration) {
  if (targets.empty()) {
    throw Error(ErrorCode::kEmptyQuerySet, "CRC interval over no queries");
  }
  const Lambda low(calibration.lambda_low);
  const Lambda high(calibration.lambda_high);
  if (!(low.value() < high.value())) {
    throw Error(ErrorCode::kInvalidLambdas,
                "calibration has lambda_low >= lambda_high");
  }
  const std::vector<QueryId> ids(targets.begin(), targets.end());
  const PreparedQueries prepared(spec, dataset, ids);
  double sum_low = 0.0;
  double sum_high = 0.0;
  double sum_pred = 0.0;
  for (int i = 0; i < prepared.size(); ++i) {
    sum_low += prepared.CrcUtility(i, low.value());
    sum_high += prepared.CrcUtility(i, high.value());
    sum_pred += prepared.PredictedUtility(i);
  }
  const double count = static_cast<double>(prepared.size());
  CiReport report;
  report.method = "crc";
  report.alpha = calibration.alpha;
  report.estimate = sum_pred / count;
  report.lower = sum_low / count;
  report.upper = sum_high / count;
  report.diagnostics["lambda_low"] = calibration.lambda_low;
  report.diagnostics["lambda_high"] = calibration.lambda_high;
  report.diagnostics["achieved_loss_low"] = calibration.achieved_loss_low;
  report.diagnostics["achieved_loss_high"] = calibration.achieved_loss_high;
  report.diagnostics["num_batches"] = calibration.num_batches;
  report.diagnostics["threshold"] = calibration.Threshold();
  return report;
}

}  // namespace relci
