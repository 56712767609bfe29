#ifndef RELCI_SYNTHETIC_LAB_H_
#define RELCI_SYNTHETIC_LAB_H_

#include <cstdint>
#include <limits>
#include <vector>

#include "relci/relevance_model.h"

namespace relci {

struct SynthConfig {
  int num_queries = 200;
  int docs_per_query = 100;
  LabelScale scale{3};
  std::vector<double> truth_prior = {0.55, 0.25, 0.13, 0.07};
  // Predicted mass at distance k from the annotator's chosen label is
  // proportional to sharpness^-k. +infinity gives one-hot predictions.
  double annotator_sharpness = 4.0;
  // Probability that the annotator centres its distribution one label away
  // from the truth (direction uniform, reflected at the scale ends).
  double annotator_noise = 0.0;
  // Standard deviation of the Gaussian noise added to the true label to form
  // the ranking score.
  double ranking_noise = 1.0;
  // Spread of per-query difficulty. Query q draws theta ~ N(0, spread^2) and
  // uses a label prior proportional to truth_prior(r) * exp(theta * r), so
  // some queries have many relevant documents and others almost none.
  double query_difficulty = 0.0;
  std::uint64_t seed = 0;

  static constexpr double kPerfectAnnotator =
      std::numeric_limits<double>::infinity();
};

// Throws kInvalidArgument on an invalid configuration.
void ValidateSynthConfig(const SynthConfig& config);

// Synthetic dataset with complete ground truth. Query i is "q%04d"; document
// j of query i is "q%04d-d%04d". Query i is generated from an Rng seeded with
// DeriveSeed(seed, i), so output is independent of generation order.
Dataset Generate(const SynthConfig& config);

// Adversarial bias: P_b(r) proportional to (1 - beta) P(r) + beta (1 - P(r)).
// beta = 0.5 gives the uniform distribution, beta = 1 the normalized
// complement. Throws kInvalidArgument unless beta in [0, 1].
RelevanceDistribution ApplyBias(const RelevanceDistribution& dist, double beta);

// Mixture with the one-hot truth: (1 - tau) P + tau onehot(truth).
// Throws kInvalidArgument unless tau in [0, 1].
RelevanceDistribution ApplyOracle(const RelevanceDistribution& dist,
                                  Judgment truth, double tau);

// Applies ApplyBias and then ApplyOracle to every predicted distribution.
// Pairs without a judgment are only biased.
Dataset TransformPredictions(const Dataset& dataset, double beta, double tau);

}  // namespace relci

#endif  // RELCI_SYNTHETIC_LAB_H_
