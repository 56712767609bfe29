#ifndef RELCI_METRICS_H_
#define RELCI_METRICS_H_

#include <map>
#include <set>
#include <string>
#include <string_view>

#include "relci/relevance_model.h"

namespace relci {

enum class MetricKind { kPrecision, kDcg };
enum class GainKind { kIdentity, kExponential };

struct MetricSpec {
  MetricKind kind = MetricKind::kDcg;
  int cutoff_k = 10;
  GainKind gain = GainKind::kExponential;

  // "dcg@10" / "prec@5". The gain is not part of the name.
  std::string Name() const;

  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

// Parses `dcg@K` or `prec@K` (lowercase, decimal K >= 1). DCG defaults to the
// exponential gain 2^r - 1, precision to the identity gain.
MetricSpec ParseMetric(std::string_view name);
MetricSpec ParseMetric(std::string_view name, GainKind gain);
GainKind ParseGain(std::string_view name);
std::string_view GainName(GainKind gain);

// Weight of a document at 1-based `rank`: 1/K (precision) or
// 1/log2(rank + 1) (DCG) within the cutoff, 0 beyond it.
double RankWeight(const MetricSpec& spec, int rank);

double Gain(const MetricSpec& spec, int label);

// Sum over ranked documents of weight(rank) * gain(label).
// Throws kUnlabeledQuery if a ranked document has no judgment.
double QueryUtilityTrue(const MetricSpec& spec, const RankedList& ranking,
                        const TruthMap& truth);

// Sum_r P(r) * gain(r).
double ExpectedGain(const MetricSpec& spec, const RelevanceDistribution& dist);

// Sum over ranked documents of weight(rank) * ExpectedGain(dist).
// Throws kInvalidDataset if a ranked document has no distribution.
double QueryUtilityPredicted(const MetricSpec& spec, const RankedList& ranking,
                             const PredictionMap& predicted);

// Uniform mean of `per_query` over `queries`. Throws kEmptyQuerySet on an
// empty set and kInvalidArgument when a query has no entry.
double DatasetUtility(const std::set<QueryId>& queries,
                      const std::map<QueryId, double>& per_query);

}  // namespace relci

#endif  // RELCI_METRICS_H_
