#include "relci/relevance_model.h"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "relci/errors.h"

namespace relci {

LabelScale::LabelScale(int max_label) : max_label_(max_label) {
  if (max_label < 1) {
    throw Error(ErrorCode::kScale,
                fmt::format("label scale needs max_label >= 1, got {}",
                            max_label));
  }
}

RelevanceDistribution RelevanceDistribution::Make(std::vector<double> probs,
                                                  const LabelScale& scale,
                                                  double tolerance) {
  RelevanceDistribution dist(std::move(probs));
  if (dist.size() != scale.num_labels()) {
    throw Error(ErrorCode::kScale,
                fmt::format("distribution has {} entries, scale 0..{} needs {}",
                            dist.size(), scale.max_label(), scale.num_labels()));
  }
  if (std::string problem = dist.Problem(scale, tolerance); !problem.empty()) {
    throw Error(ErrorCode::kDistribution, problem);
  }
  return dist;
}

RelevanceDistribution RelevanceDistribution::OneHot(const LabelScale& scale,
                                                    int label) {
  if (!scale.Contains(label)) {
    throw Error(ErrorCode::kScale,
                fmt::format("label {} outside 0..{}", label, scale.max_label()));
  }
  std::vector<double> probs(scale.num_labels(), 0.0);
  probs[label] = 1.0;
  return RelevanceDistribution(std::move(probs));
}

std::string RelevanceDistribution::Problem(const LabelScale& scale,
                                           double tolerance) const {
  if (size() != scale.num_labels()) {
    return fmt::format("probs length {} != {}", size(), scale.num_labels());
  }
  double sum = 0.0;
  for (int r = 0; r < size(); ++r) {
    const double p = probs_[r];
    if (!(p >= 0.0 && p <= 1.0)) {
      return fmt::format("probs[{}] = {} outside [0, 1]", r, p);
    }
    sum += p;
  }
  if (!(std::abs(sum - 1.0) <= tolerance)) {
    return fmt::format("probs sum {} != 1", sum);
  }
  return {};
}

std::vector<QueryId> Dataset::QueryIds() const {
  std::vector<QueryId> ids;
  ids.reserve(rankings.size());
  for (const auto& [id, ranking] : rankings) ids.push_back(id);
  return ids;
}

bool Dataset::IsLabeled(const QueryId& query_id) const {
  const RankedList& ranking = Ranking(query_id);
  for (const auto& doc : ranking.doc_ids) {
    if (!truth.contains({query_id, doc})) return false;
  }
  return true;
}

std::vector<QueryId> Dataset::LabeledQueries() const {
  std::vector<QueryId> ids;
  for (const auto& [id, ranking] : rankings) {
    if (IsLabeled(id)) ids.push_back(id);
  }
  return ids;
}

const RankedList& Dataset::Ranking(const QueryId& query_id) const {
  auto it = rankings.find(query_id);
  if (it == rankings.end()) {
    throw Error(ErrorCode::kInvalidDataset,
                fmt::format("unknown query '{}'", query_id));
  }
  return it->second;
}

std::vector<Violation> ValidateDataset(const Dataset& dataset) {
  std::vector<Violation> out;
  for (const auto& [qid, ranking] : dataset.rankings) {
    if (ranking.query_id != qid) {
      out.push_back({qid, "", "ranking-key",
                     fmt::format("ranking stored under '{}' names query '{}'",
                                 qid, ranking.query_id)});
    }
    std::set<std::string> seen;
    for (const auto& doc : ranking.doc_ids) {
      if (!seen.insert(doc).second) {
        out.push_back({qid, doc, "unique-docs",
                       "document appears more than once in the ranking"});
      }
      if (!dataset.predicted.contains({qid, doc})) {
        out.push_back({qid, doc, "missing-prediction",
                       "ranked document has no predicted distribution"});
      }
    }
  }
  for (const auto& [key, dist] : dataset.predicted) {
    if (std::string problem = dist.Problem(dataset.scale); !problem.empty()) {
      out.push_back({key.first, key.second, "distribution", problem});
    }
  }
  for (const auto& [key, judgment] : dataset.truth) {
    if (!dataset.scale.Contains(judgment.label)) {
      out.push_back({key.first, key.second, "label-scale",
                     fmt::format("label {} outside 0..{}", judgment.label,
                                 dataset.scale.max_label())});
    }
  }
  return out;
}

std::vector<Violation> ValidateSplit(const Dataset& dataset,
                                     const Split& split) {
  std::vector<Violation> out;
  for (const auto& q : split.validation_queries) {
    if (split.test_queries.contains(q)) {
      out.push_back({q, "", "split-disjoint",
                     "query is in both validation and test"});
    }
    if (!dataset.rankings.contains(q)) {
      out.push_back({q, "", "split-subset", "validation query not in dataset"});
    } else if (!dataset.IsLabeled(q)) {
      out.push_back({q, "", "split-labeled", "validation query is unlabeled"});
    }
  }
  for (const auto& q : split.test_queries) {
    if (!dataset.rankings.contains(q)) {
      out.push_back({q, "", "split-subset", "test query not in dataset"});
    }
  }
  return out;
}

}  // namespace relci
