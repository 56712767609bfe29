#include "relci/synthetic_lab.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "relci/errors.h"
#include "relci/random.h"

namespace relci {
namespace {

int DrawLabel(Rng& rng, std::span<const double> prior) {
  const double u = rng.Uniform();
  double cumulative = 0.0;
  for (std::size_t r = 0; r < prior.size(); ++r) {
    cumulative += prior[r];
    if (u < cumulative) return static_cast<int>(r);
  }
  // u fell into the rounding gap above the last cumulative sum.
  for (std::size_t r = prior.size(); r-- > 0;) {
    if (prior[r] > 0.0) return static_cast<int>(r);
  }
  return 0;
}

std::vector<double> Kernel(int num_labels, int centre, double sharpness) {
  std::vector<double> probs(num_labels, 0.0);
  if (std::isinf(sharpness)) {
    probs[centre] = 1.0;
    return probs;
  }
  double total = 0.0;
  for (int r = 0; r < num_labels; ++r) {
    probs[r] = std::pow(sharpness, -static_cast<double>(std::abs(r - centre)));
    total += probs[r];
  }
  for (double& p : probs) p /= total;
  return probs;
}

}  // namespace

void ValidateSynthConfig(const SynthConfig& config) {
  const auto fail = [](const std::string& message) {
    throw Error(ErrorCode::kInvalidArgument,
                "invalid synthetic config: " + message);
  };
  if (config.num_queries < 0) fail("num_queries must be >= 0");
  if (config.docs_per_query < 1) fail("docs_per_query must be >= 1");
  const RelevanceDistribution prior(config.truth_prior);
  if (std::string problem = prior.Problem(config.scale); !problem.empty()) {
    fail("truth_prior: " + problem);
  }
  if (!(config.annotator_sharpness > 0.0)) fail("annotator_sharpness must be > 0");
  if (!(config.annotator_noise >= 0.0 && config.annotator_noise <= 1.0)) {
    fail("annotator_noise must be in [0, 1]");
  }
  if (!(config.ranking_noise >= 0.0) || std::isinf(config.ranking_noise)) {
    fail("ranking_noise must be finite and >= 0");
  }
  if (!(config.query_difficulty >= 0.0) ||
      std::isinf(config.query_difficulty)) {
    fail("query_difficulty must be finite and >= 0");
  }
}

Dataset Generate(const SynthConfig& config) {
  ValidateSynthConfig(config);
  Dataset dataset;
  dataset.scale = config.scale;
  const int num_labels = config.scale.num_labels();

  struct Doc {
    std::string id;
    double score;
  };
  for (int q = 0; q < config.num_queries; ++q) {
    Rng rng(DeriveSeed(config.seed, static_cast<std::uint64_t>(q)));
    const std::string qid = fmt::format("q{:04d}", q);
    std::vector<double> prior = config.truth_prior;
    if (config.query_difficulty > 0.0) {
      const double theta = config.query_difficulty * rng.Normal();
      double total = 0.0;
      for (std::size_t r = 0; r < prior.size(); ++r) {
        prior[r] *= std::exp(theta * static_cast<double>(r));
        total += prior[r];
      }
      for (double& p : prior) p /= total;
    }
    std::vector<Doc> docs;
    docs.reserve(config.docs_per_query);
    for (int j = 0; j < config.docs_per_query; ++j) {
      std::string did = fmt::format("{}-d{:04d}", qid, j);
      const int label = DrawLabel(rng, prior);
      int centre = label;
      if (rng.Uniform() < config.annotator_noise) {
        const int step = rng.Uniform() < 0.5 ? -1 : 1;
        centre = label + step;
        if (centre < 0 || centre >= num_labels) centre = label - step;
      }
      const double score = label + config.ranking_noise * rng.Normal();
      dataset.truth[{qid, did}] = Judgment{label};
      dataset.predicted[{qid, did}] = RelevanceDistribution(
          Kernel(num_labels, centre, config.annotator_sharpness));
      docs.push_back({std::move(did), score});
    }
    std::sort(docs.begin(), docs.end(), [](const Doc& a, const Doc& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.id < b.id;
    });
    RankedList ranking{qid, {}};
    ranking.doc_ids.reserve(docs.size());
    for (auto& doc : docs) ranking.doc_ids.push_back(std::move(doc.id));
    dataset.rankings.emplace(qid, std::move(ranking));
  }
  return dataset;
}

RelevanceDistribution ApplyBias(const RelevanceDistribution& dist,
                                double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("beta must be in [0, 1], got {}", beta));
  }
  if (beta == 0.0) return dist;
  std::vector<double> out(dist.size());
  double total = 0.0;
  for (int r = 0; r < dist.size(); ++r) {
    out[r] = (1.0 - beta) * dist[r] + beta * (1.0 - dist[r]);
    total += out[r];
  }
  for (double& p : out) p /= total;
  return RelevanceDistribution(std::move(out));
}

RelevanceDistribution ApplyOracle(const RelevanceDistribution& dist,
                                  Judgment truth, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("tau must be in [0, 1], got {}", tau));
  }
  if (truth.label < 0 || truth.label >= dist.size()) {
    throw Error(ErrorCode::kScale,
                fmt::format("truth label {} outside the distribution's scale",
                            truth.label));
  }
  if (tau == 0.0) return dist;
  std::vector<double> out(dist.size());
  for (int r = 0; r < dist.size(); ++r) {
    out[r] = (1.0 - tau) * dist[r] + (r == truth.label ? tau : 0.0);
  }
  return RelevanceDistribution(std::move(out));
}

Dataset TransformPredictions(const Dataset& dataset, double beta, double tau) {
  Dataset out = dataset;
  for (auto& [key, dist] : out.predicted) {
    dist = ApplyBias(dist, beta);
    if (auto it = out.truth.find(key); it != out.truth.end()) {
      dist = ApplyOracle(dist, it->second, tau);
    }
  }
  return out;
}

}  // namespace relci
