#ifndef RELCI_CORPUS_IO_H_
#define RELCI_CORPUS_IO_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relci/relevance_model.h"

namespace relci {

// TREC run line: "qid Q0 docid rank score tag".
struct RunLine {
  std::string qid;
  std::string docid;
  int rank = 1;
  double score = 0.0;
  std::string tag;

  friend bool operator==(const RunLine&, const RunLine&) = default;
};

// TREC qrels line: "qid iteration docid label".
struct QrelLine {
  std::string qid;
  std::string iteration;
  std::string docid;
  int label = 0;

  friend bool operator==(const QrelLine&, const QrelLine&) = default;
};

// One JSON object per line: {"qid": ..., "docid": ..., "probs": [...]}.
struct DistLine {
  std::string qid;
  std::string docid;
  std::vector<double> probs;

  friend bool operator==(const DistLine&, const DistLine&) = default;
};

// Line-level parsers. Blank lines are skipped, a trailing CR is dropped, and
// errors carry the 1-based line number ("line N: ..."). Throws kParse.
std::vector<RunLine> ParseRunLines(std::string_view text);
std::vector<QrelLine> ParseQrelLines(std::string_view text);
std::vector<DistLine> ParseDistLines(std::string_view text);

// Canonical writers: single spaces, LF line ends, reals with 17 significant
// digits.
std::string WriteRunLines(const std::vector<RunLine>& lines);
std::string WriteQrelLines(const std::vector<QrelLine>& lines);
std::string WriteDistLines(const std::vector<DistLine>& lines);

// Groups a run by query and orders each list by (score desc, docid asc). The
// rank column is ignored. Throws kDuplicateEntry on a repeated (qid, docid).
RankingMap ParseRun(std::string_view text);

// Throws kScale on labels outside `scale`, kDuplicateEntry on repeats.
TruthMap ParseQrels(std::string_view text, const LabelScale& scale);

// Throws kScale on a length mismatch, kDistribution when the probabilities
// are outside [0, 1] or do not sum to 1 within 1e-6.
PredictionMap ParseDists(std::string_view text, const LabelScale& scale);

inline constexpr double kDistFileTolerance = 1e-6;

// Writers for the in-memory maps. Runs are written with rank i and score
// (list size - i + 1) under `tag`; qrels with iteration "0".
std::string WriteRun(const RankingMap& rankings, std::string_view tag = "relci");
std::string WriteQrels(const TruthMap& truth);
std::string WriteDists(const PredictionMap& predicted);

// Throws kIo when the file cannot be read or written.
std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view contents);

// Builds a dataset from parsed parts. Every ranked pair must have a
// distribution; truth may be partial.
Dataset AssembleDataset(const LabelScale& scale, RankingMap rankings,
                        TruthMap truth, PredictionMap predicted);

// Random split: within each stratum (all queries form one stratum when
// `strata` is absent) the labeled queries are shuffled and
// round(ratio * stratum size) of them, at most all labeled ones, go to
// validation; everything else goes to test. Strata with fewer than two
// queries produce a warning and are placed wholly on one side by a seeded
// draw. Throws kInvalidArgument unless 0 < ratio < 1.
Split SplitDataset(const Dataset& dataset, double ratio,
                   const std::optional<std::map<QueryId, std::string>>& strata,
                   std::uint64_t seed);

}  // namespace relci

#endif  // RELCI_CORPUS_IO_H_
