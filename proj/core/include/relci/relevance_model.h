#ifndef RELCI_RELEVANCE_MODEL_H_
#define RELCI_RELEVANCE_MODEL_H_

#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace relci {

// Ordinal relevance labels 0..max_label.
class LabelScale {
 public:
  // Throws kScale unless max_label >= 1.
  explicit LabelScale(int max_label);

  int max_label() const { return max_label_; }
  int num_labels() const { return max_label_ + 1; }
  bool Contains(int label) const { return label >= 0 && label <= max_label_; }

  friend bool operator==(const LabelScale&, const LabelScale&) = default;

 private:
  int max_label_;
};

inline constexpr double kDistributionTolerance = 1e-9;

// Predicted probability vector over a label scale, label 0 first.
//
// Construction does not validate so that datasets can carry (and report)
// malformed input; use Make() for a checked value or Problem() to inspect.
class RelevanceDistribution {
 public:
  RelevanceDistribution() = default;
  explicit RelevanceDistribution(std::vector<double> probs)
      : probs_(std::move(probs)) {}

  // Throws kDistribution on entries outside [0, 1] or a sum off by more than
  // `tolerance`, kScale on a length mismatch.
  static RelevanceDistribution Make(std::vector<double> probs,
                                    const LabelScale& scale,
                                    double tolerance = kDistributionTolerance);

  static RelevanceDistribution OneHot(const LabelScale& scale, int label);

  // Empty string when valid for `scale`, otherwise a description.
  std::string Problem(const LabelScale& scale,
                      double tolerance = kDistributionTolerance) const;

  std::span<const double> probs() const { return probs_; }
  double operator[](int label) const { return probs_[label]; }
  int size() const { return static_cast<int>(probs_.size()); }

  friend bool operator==(const RelevanceDistribution&,
                         const RelevanceDistribution&) = default;

 private:
  std::vector<double> probs_;
};

struct Judgment {
  int label = 0;
  friend bool operator==(const Judgment&, const Judgment&) = default;
};

struct RankedList {
  std::string query_id;
  std::vector<std::string> doc_ids;  // rank 1 first

  friend bool operator==(const RankedList&, const RankedList&) = default;
};

using QueryId = std::string;
using DocKey = std::pair<std::string, std::string>;  // (query_id, doc_id)

using TruthMap = std::map<DocKey, Judgment>;
using PredictionMap = std::map<DocKey, RelevanceDistribution>;
using RankingMap = std::map<QueryId, RankedList>;

struct Dataset {
  LabelScale scale{1};
  RankingMap rankings;
  TruthMap truth;
  PredictionMap predicted;

  std::vector<QueryId> QueryIds() const;

  // A query is labeled iff every document in its ranking has a judgment.
  bool IsLabeled(const QueryId& query_id) const;
  std::vector<QueryId> LabeledQueries() const;

  const RankedList& Ranking(const QueryId& query_id) const;
};

struct Split {
  std::set<QueryId> validation_queries;
  std::set<QueryId> test_queries;
  // Non-fatal notes raised while splitting (e.g. tiny strata).
  std::vector<std::string> warnings;
};

struct Violation {
  std::string query_id;
  std::string doc_id;
  std::string rule;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

// Checks every type invariant of `dataset`. Returns an empty list iff the
// dataset is well formed.
std::vector<Violation> ValidateDataset(const Dataset& dataset);

// Checks the Split invariants against `dataset`.
std::vector<Violation> ValidateSplit(const Dataset& dataset,
                                     const Split& split);

}  // namespace relci

#endif  // RELCI_RELEVANCE_MODEL_H_
