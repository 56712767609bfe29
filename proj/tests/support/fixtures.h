#ifndef RELCI_TESTS_SUPPORT_FIXTURES_H_
#define RELCI_TESTS_SUPPORT_FIXTURES_H_

#include <optional>
#include <string>
#include <vector>

#include "relci/relevance_model.h"

namespace relci::testing {

struct DocSpec {
  std::string id;
  std::optional<int> label;  // absent: unjudged
  std::vector<double> probs;
};

struct QuerySpec {
  std::string id;
  std::vector<DocSpec> docs;  // rank order
};

inline Dataset MakeDataset(int max_label, const std::vector<QuerySpec>& queries) {
  Dataset d;
  d.scale = LabelScale(max_label);
  for (const auto& q : queries) {
    RankedList ranking{q.id, {}};
    for (const auto& doc : q.docs) {
      ranking.doc_ids.push_back(doc.id);
      if (doc.label) d.truth[{q.id, doc.id}] = Judgment{*doc.label};
      d.predicted[{q.id, doc.id}] = RelevanceDistribution(doc.probs);
    }
    d.rankings.emplace(q.id, std::move(ranking));
  }
  return d;
}

inline std::vector<double> OneHot(int num_labels, int label) {
  std::vector<double> p(num_labels, 0.0);
  p[label] = 1.0;
  return p;
}

}  // namespace relci::testing

#endif  // RELCI_TESTS_SUPPORT_FIXTURES_H_
