#include "relci/metrics.h"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "relci/errors.h"

namespace relci {

std::string MetricSpec::Name() const {
  return fmt::format("{}@{}", kind == MetricKind::kDcg ? "dcg" : "prec",
                     cutoff_k);
}

MetricSpec ParseMetric(std::string_view name) {
  MetricSpec spec = ParseMetric(name, GainKind::kIdentity);
  spec.gain = spec.kind == MetricKind::kDcg ? GainKind::kExponential
                                            : GainKind::kIdentity;
  return spec;
}

MetricSpec ParseMetric(std::string_view name, GainKind gain) {
  const auto bad = [&] {
    return Error(ErrorCode::kUsage,
                 fmt::format("metric '{}' must be dcg@K or prec@K", name));
  };
  const auto at = name.find('@');
  if (at == std::string_view::npos) throw bad();
  MetricSpec spec;
  const std::string_view family = name.substr(0, at);
  if (family == "dcg") {
    spec.kind = MetricKind::kDcg;
  } else if (family == "prec") {
    spec.kind = MetricKind::kPrecision;
  } else {
    throw bad();
  }
  const std::string_view digits = name.substr(at + 1);
  if (digits.empty() || digits.front() == '+' || digits.front() == '-') {
    throw bad();
  }
  int k = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || k < 1) {
    throw bad();
  }
  spec.cutoff_k = k;
  spec.gain = gain;
  return spec;
}

GainKind ParseGain(std::string_view name) {
  if (name == "identity") return GainKind::kIdentity;
  if (name == "exponential") return GainKind::kExponential;
  throw Error(ErrorCode::kUsage,
              fmt::format("gain '{}' must be identity or exponential", name));
}

std::string_view GainName(GainKind gain) {
  return gain == GainKind::kIdentity ? "identity" : "exponential";
}

double RankWeight(const MetricSpec& spec, int rank) {
  if (rank < 1) {
    throw Error(ErrorCode::kInvalidRank,
                fmt::format("rank must be >= 1, got {}", rank));
  }
  if (rank > spec.cutoff_k) return 0.0;
  if (spec.kind == MetricKind::kPrecision) {
    return 1.0 / static_cast<double>(spec.cutoff_k);
  }
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

double Gain(const MetricSpec& spec, int label) {
  if (label < 0) {
    throw Error(ErrorCode::kScale, fmt::format("negative label {}", label));
  }
  if (spec.gain == GainKind::kIdentity) return static_cast<double>(label);
  return std::exp2(static_cast<double>(label)) - 1.0;
}

double QueryUtilityTrue(const MetricSpec& spec, const RankedList& ranking,
                        const TruthMap& truth) {
  double total = 0.0;
  int rank = 0;
  for (const auto& doc : ranking.doc_ids) {
    ++rank;
    auto it = truth.find({ranking.query_id, doc});
    if (it == truth.end()) {
      throw Error(ErrorCode::kUnlabeledQuery,
                  fmt::format("query '{}' has no judgment for '{}'",
                              ranking.query_id, doc));
    }
    if (rank > spec.cutoff_k) continue;
    total += RankWeight(spec, rank) * Gain(spec, it->second.label);
  }
  return total;
}

double ExpectedGain(const MetricSpec& spec, const RelevanceDistribution& dist) {
  double total = 0.0;
  for (int r = 0; r < dist.size(); ++r) total += dist[r] * Gain(spec, r);
  return total;
}

double QueryUtilityPredicted(const MetricSpec& spec, const RankedList& ranking,
                             const PredictionMap& predicted) {
  double total = 0.0;
  int rank = 0;
  for (const auto& doc : ranking.doc_ids) {
    ++rank;
    auto it = predicted.find({ranking.query_id, doc});
    if (it == predicted.end()) {
      throw Error(ErrorCode::kInvalidDataset,
                  fmt::format("query '{}' has no distribution for '{}'",
                              ranking.query_id, doc));
    }
    if (rank > spec.cutoff_k) continue;
    total += RankWeight(spec, rank) * ExpectedGain(spec, it->second);
  }
  return total;
}

double DatasetUtility(const std::set<QueryId>& queries,
                      const std::map<QueryId, double>& per_query) {
  if (queries.empty()) {
    throw Error(ErrorCode::kEmptyQuerySet, "dataset utility of no queries");
  }
  double total = 0.0;
  for (const auto& q : queries) {
    auto it = per_query.find(q);
    if (it == per_query.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("no utility for query '{}'", q));
    }
    total += it->second;
  }
  return total / static_cast<double>(queries.size());
}

}  // namespace relci
