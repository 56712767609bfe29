#ifndef RELCI_PPI_CI_H_
#define RELCI_PPI_CI_H_

#include <set>
#include <span>

#include "relci/ci_report.h"
#include "relci/metrics.h"
#include "relci/relevance_model.h"

namespace relci {

// Prediction-powered estimate of the mean utility.
struct PpiEstimate {
  double estimate = 0.0;
  double var_pred = 0.0;   // sample variance of predicted utilities, all N
  double var_error = 0.0;  // sample variance of (true - predicted), labeled n
  int n = 0;
  int N = 0;
};

// `true_u[i]` and `pred_u_labeled[i]` describe the same labeled query;
// `pred_u_all` holds predicted utilities of every query (labeled included).
//
// estimate = mean(pred_u_all) + mean(true_u - pred_u_labeled).
PpiEstimate ComputePpiEstimate(std::span<const double> true_u,
                               std::span<const double> pred_u_labeled,
                               std::span<const double> pred_u_all);

// Normal-approximation interval:
//   estimate +/- z(1 - alpha/2) * sqrt(var_error / n + var_pred / N).
// The prediction error is implicitly treated as symmetric; no skew
// correction is applied.
CiReport PpiCi(const PpiEstimate& estimate, double alpha);

// Convenience over a dataset: labeled queries are identified by membership in
// `labeled`, predictions are taken over `all` (which should include them).
PpiEstimate PpiEstimateForDataset(const MetricSpec& spec,
                                  const Dataset& dataset,
                                  const std::set<QueryId>& labeled,
                                  const std::set<QueryId>& all);

}  // namespace relci

#endif  // RELCI_PPI_CI_H_
