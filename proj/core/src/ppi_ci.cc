#include "relci/ppi_ci.h"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "relci/errors.h"
#include "relci/stats.h"

namespace relci {

PpiEstimate ComputePpiEstimate(std::span<const double> true_u,
                               std::span<const double> pred_u_labeled,
                               std::span<const double> pred_u_all) {
  if (true_u.size() != pred_u_labeled.size()) {
    throw Error(ErrorCode::kAlignment,
                fmt::format("{} true utilities but {} labeled predictions",
                            true_u.size(), pred_u_labeled.size()));
  }
  if (pred_u_all.size() < pred_u_labeled.size()) {
    throw Error(ErrorCode::kAlignment,
                fmt::format("N = {} is smaller than n = {}", pred_u_all.size(),
                            pred_u_labeled.size()));
  }
  if (true_u.size() < 2 || pred_u_all.size() < 2) {
    throw Error(ErrorCode::kInsufficientData,
                fmt::format("PPI needs n >= 2 and N >= 2 (n = {}, N = {})",
                            true_u.size(), pred_u_all.size()));
  }
  std::vector<double> errors(true_u.size());
  for (std::size_t i = 0; i < true_u.size(); ++i) {
    errors[i] = true_u[i] - pred_u_labeled[i];
  }
  PpiEstimate est;
  est.n = static_cast<int>(true_u.size());
  est.N = static_cast<int>(pred_u_all.size());
  est.estimate = stats::Mean(pred_u_all) + stats::Mean(errors);
  est.var_pred = stats::SampleVariance(pred_u_all);
  est.var_error = stats::SampleVariance(errors);
  return est;
}

CiReport PpiCi(const PpiEstimate& estimate, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidAlpha,
                fmt::format("alpha must be in (0, 1), got {}", alpha));
  }
  if (estimate.n < 2 || estimate.N < estimate.n || estimate.var_pred < 0.0 ||
      estimate.var_error < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "malformed PPI estimate");
  }
  const double z = stats::NormalQuantile(1.0 - alpha / 2.0);
  const double half_width =
      z * std::sqrt(estimate.var_error / estimate.n +
                    estimate.var_pred / estimate.N);
  CiReport report;
  report.method = "ppi";
  report.alpha = alpha;
  report.estimate = estimate.estimate;
  report.lower = estimate.estimate - half_width;
  report.upper = estimate.estimate + half_width;
  report.diagnostics["var_pred"] = estimate.var_pred;
  report.diagnostics["var_error"] = estimate.var_error;
  report.diagnostics["n"] = estimate.n;
  report.diagnostics["N"] = estimate.N;
  report.diagnostics["z"] = z;
  return report;
}

PpiEstimate PpiEstimateForDataset(const MetricSpec& spec,
                                  const Dataset& dataset,
                                  const std::set<QueryId>& labeled,
                                  const std::set<QueryId>& all) {
  for (const auto& q : labeled) {
    if (!all.contains(q)) {
      throw Error(ErrorCode::kAlignment,
                  fmt::format("labeled query '{}' missing from the full set", q));
    }
  }
  std::vector<double> true_u;
  std::vector<double> pred_labeled;
  std::vector<double> pred_all;
  for (const auto& q : labeled) {
    const RankedList& ranking = dataset.Ranking(q);
    true_u.push_back(QueryUtilityTrue(spec, ranking, dataset.truth));
    pred_labeled.push_back(
        QueryUtilityPredicted(spec, ranking, dataset.predicted));
  }
  for (const auto& q : all) {
    pred_all.push_back(
        QueryUtilityPredicted(spec, dataset.Ranking(q), dataset.predicted));
  }
  return ComputePpiEstimate(true_u, pred_labeled, pred_all);
}

}  // namespace relci
