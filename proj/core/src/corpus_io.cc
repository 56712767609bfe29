#include "relci/corpus_io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "relci/errors.h"
#include "relci/random.h"

namespace relci {
namespace {

// Calls fn(line_number, line) for each non-blank line, CR stripped.
template <typename Fn>
void ForEachLine(std::string_view text, Fn&& fn) {
  int number = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    fn(number, line);
  }
}

std::vector<std::string_view> Fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    pos = line.find_first_not_of(" \t", pos);
    if (pos == std::string_view::npos) break;
    std::size_t end = line.find_first_of(" \t", pos);
    if (end == std::string_view::npos) end = line.size();
    out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

Error LineError(ErrorCode code, int line, const std::string& message) {
  return Error(code, fmt::format("line {}: {}", line, message));
}

int ParseInt(std::string_view field, int line, std::string_view what) {
  int value = 0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) {
    throw LineError(ErrorCode::kParse, line,
                    fmt::format("{} '{}' is not an integer", what, field));
  }
  return value;
}

double ParseReal(std::string_view field, int line, std::string_view what) {
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() ||
      !std::isfinite(value)) {
    throw LineError(ErrorCode::kParse, line,
                    fmt::format("{} '{}' is not a finite number", what, field));
  }
  return value;
}

void CheckToken(std::string_view token, std::string_view what) {
  if (token.empty() || token.find_first_of(" \t\r\n") != std::string_view::npos) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("{} '{}' is empty or contains whitespace", what,
                            token));
  }
}

}  // namespace

std::vector<RunLine> ParseRunLines(std::string_view text) {
  std::vector<RunLine> out;
  ForEachLine(text, [&](int number, std::string_view line) {
    const auto f = Fields(line);
    if (f.size() != 6) {
      throw LineError(ErrorCode::kParse, number,
                      fmt::format("run line needs 6 fields, found {}", f.size()));
    }
    if (f[1] != "Q0") {
      throw LineError(ErrorCode::kParse, number,
                      fmt::format("second field must be Q0, found '{}'", f[1]));
    }
    RunLine run;
    run.qid = f[0];
    run.docid = f[2];
    run.rank = ParseInt(f[3], number, "rank");
    if (run.rank < 1) {
      throw LineError(ErrorCode::kParse, number, "rank must be positive");
    }
    run.score = ParseReal(f[4], number, "score");
    run.tag = f[5];
    out.push_back(std::move(run));
  });
  return out;
}

std::vector<QrelLine> ParseQrelLines(std::string_view text) {
  std::vector<QrelLine> out;
  ForEachLine(text, [&](int number, std::string_view line) {
    const auto f = Fields(line);
    if (f.size() != 4) {
      throw LineError(ErrorCode::kParse, number,
                      fmt::format("qrels line needs 4 fields, found {}",
                                  f.size()));
    }
    out.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2]),
                   ParseInt(f[3], number, "label")});
  });
  return out;
}

std::vector<DistLine> ParseDistLines(std::string_view text) {
  std::vector<DistLine> out;
  ForEachLine(text, [&](int number, std::string_view line) {
    nlohmann::json json;
    try {
      json = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw LineError(ErrorCode::kParse, number,
                      fmt::format("invalid JSON: {}", e.what()));
    }
    const auto field = [&](const char* key) -> const nlohmann::json& {
      if (!json.is_object() || !json.contains(key)) {
        throw LineError(ErrorCode::kParse, number,
                        fmt::format("missing key \"{}\"", key));
      }
      return json.at(key);
    };
    DistLine dist;
    const auto& qid = field("qid");
    const auto& docid = field("docid");
    const auto& probs = field("probs");
    if (!qid.is_string() || !docid.is_string()) {
      throw LineError(ErrorCode::kParse, number, "qid and docid must be strings");
    }
    if (!probs.is_array()) {
      throw LineError(ErrorCode::kParse, number, "probs must be an array");
    }
    dist.qid = qid.get<std::string>();
    dist.docid = docid.get<std::string>();
    for (const auto& p : probs) {
      if (!p.is_number()) {
        throw LineError(ErrorCode::kParse, number, "probs must be numbers");
      }
      dist.probs.push_back(p.get<double>());
    }
    out.push_back(std::move(dist));
  });
  return out;
}

std::string WriteRunLines(const std::vector<RunLine>& lines) {
  std::string out;
  for (const auto& l : lines) {
    CheckToken(l.qid, "qid");
    CheckToken(l.docid, "docid");
    CheckToken(l.tag, "tag");
    out += fmt::format("{} Q0 {} {} {:.17g} {}\n", l.qid, l.docid, l.rank,
                       l.score, l.tag);
  }
  return out;
}

std::string WriteQrelLines(const std::vector<QrelLine>& lines) {
  std::string out;
  for (const auto& l : lines) {
    CheckToken(l.qid, "qid");
    CheckToken(l.iteration, "iteration");
    CheckToken(l.docid, "docid");
    out += fmt::format("{} {} {} {}\n", l.qid, l.iteration, l.docid, l.label);
  }
  return out;
}

std::string WriteDistLines(const std::vector<DistLine>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += fmt::format("{{\"qid\":{},\"docid\":{},\"probs\":[",
                       nlohmann::json(l.qid).dump(),
                       nlohmann::json(l.docid).dump());
    for (std::size_t i = 0; i < l.probs.size(); ++i) {
      if (i > 0) out += ',';
      out += fmt::format("{:.17g}", l.probs[i]);
    }
    out += "]}\n";
  }
  return out;
}

RankingMap ParseRun(std::string_view text) {
  struct Entry {
    std::string docid;
    double score;
  };
  std::map<QueryId, std::vector<Entry>> grouped;
  std::set<DocKey> seen;
  int index = 0;
  const auto lines = ParseRunLines(text);
  // Recover line numbers for duplicate reporting.
  std::vector<int> numbers;
  ForEachLine(text, [&](int number, std::string_view) { numbers.push_back(number); });
  for (const auto& line : lines) {
    if (!seen.insert({line.qid, line.docid}).second) {
      throw LineError(ErrorCode::kDuplicateEntry, numbers[index],
                      fmt::format("duplicate run entry ('{}', '{}')", line.qid,
                                  line.docid));
    }
    grouped[line.qid].push_back({line.docid, line.score});
    ++index;
  }
  RankingMap rankings;
  for (auto& [qid, entries] : grouped) {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.docid < b.docid;
              });
    RankedList list{qid, {}};
    list.doc_ids.reserve(entries.size());
    for (auto& e : entries) list.doc_ids.push_back(std::move(e.docid));
    rankings.emplace(qid, std::move(list));
  }
  return rankings;
}

TruthMap ParseQrels(std::string_view text, const LabelScale& scale) {
  TruthMap truth;
  std::vector<int> numbers;
  ForEachLine(text, [&](int number, std::string_view) { numbers.push_back(number); });
  const auto lines = ParseQrelLines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& l = lines[i];
    if (!scale.Contains(l.label)) {
      throw LineError(ErrorCode::kScale, numbers[i],
                      fmt::format("label {} outside 0..{}", l.label,
                                  scale.max_label()));
    }
    if (!truth.emplace(DocKey{l.qid, l.docid}, Judgment{l.label}).second) {
      throw LineError(ErrorCode::kDuplicateEntry, numbers[i],
                      fmt::format("duplicate judgment ('{}', '{}')", l.qid,
                                  l.docid));
    }
  }
  return truth;
}

PredictionMap ParseDists(std::string_view text, const LabelScale& scale) {
  PredictionMap predicted;
  std::vector<int> numbers;
  ForEachLine(text, [&](int number, std::string_view) { numbers.push_back(number); });
  auto lines = ParseDistLines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto& l = lines[i];
    RelevanceDistribution dist(std::move(l.probs));
    if (dist.size() != scale.num_labels()) {
      throw LineError(ErrorCode::kScale, numbers[i],
                      fmt::format("{} probabilities for scale 0..{}",
                                  dist.size(), scale.max_label()));
    }
    if (std::string problem = dist.Problem(scale, kDistFileTolerance);
        !problem.empty()) {
      throw LineError(ErrorCode::kDistribution, numbers[i], problem);
    }
    if (!predicted.emplace(DocKey{l.qid, l.docid}, std::move(dist)).second) {
      throw LineError(ErrorCode::kDuplicateEntry, numbers[i],
                      fmt::format("duplicate distribution ('{}', '{}')", l.qid,
                                  l.docid));
    }
  }
  return predicted;
}

std::string WriteRun(const RankingMap& rankings, std::string_view tag) {
  std::vector<RunLine> lines;
  for (const auto& [qid, list] : rankings) {
    const int size = static_cast<int>(list.doc_ids.size());
    for (int i = 0; i < size; ++i) {
      lines.push_back({qid, list.doc_ids[i], i + 1,
                       static_cast<double>(size - i), std::string(tag)});
    }
  }
  return WriteRunLines(lines);
}

std::string WriteQrels(const TruthMap& truth) {
  std::vector<QrelLine> lines;
  lines.reserve(truth.size());
  for (const auto& [key, judgment] : truth) {
    lines.push_back({key.first, "0", key.second, judgment.label});
  }
  return WriteQrelLines(lines);
}

std::string WriteDists(const PredictionMap& predicted) {
  std::vector<DistLine> lines;
  lines.reserve(predicted.size());
  for (const auto& [key, dist] : predicted) {
    const auto probs = dist.probs();
    lines.push_back({key.first, key.second, {probs.begin(), probs.end()}});
  }
  return WriteDistLines(lines);
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, fmt::format("cannot read '{}'", path.string()));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) {
    throw Error(ErrorCode::kIo, fmt::format("error reading '{}'", path.string()));
  }
  return buffer.str();
}

void WriteFile(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIo, fmt::format("cannot write '{}'", path.string()));
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) {
    throw Error(ErrorCode::kIo, fmt::format("error writing '{}'", path.string()));
  }
}

Dataset AssembleDataset(const LabelScale& scale, RankingMap rankings,
                        TruthMap truth, PredictionMap predicted) {
  for (const auto& [qid, list] : rankings) {
    for (const auto& doc : list.doc_ids) {
      if (!predicted.contains({qid, doc})) {
        throw Error(ErrorCode::kInvalidDataset,
                    fmt::format("ranked pair ('{}', '{}') has no predicted "
                                "distribution",
                                qid, doc));
      }
    }
  }
  Dataset dataset;
  dataset.scale = scale;
  dataset.rankings = std::move(rankings);
  dataset.truth = std::move(truth);
  dataset.predicted = std::move(predicted);
  return dataset;
}

Split SplitDataset(const Dataset& dataset, double ratio,
                   const std::optional<std::map<QueryId, std::string>>& strata,
                   std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("split ratio must be in (0, 1), got {}", ratio));
  }
  std::map<std::string, std::vector<QueryId>> groups;
  for (const auto& [qid, list] : dataset.rankings) {
    std::string stratum;
    if (strata) {
      auto it = strata->find(qid);
      if (it != strata->end()) stratum = it->second;
    }
    groups[stratum].push_back(qid);
  }

  Split split;
  std::uint64_t stream = 0;
  for (const auto& [stratum, queries] : groups) {
    Rng rng(DeriveSeed(seed, stream++));
    if (queries.size() < 2) {
      split.warnings.push_back(fmt::format(
          "stratum '{}' has {} quer{}; placed on one side", stratum,
          queries.size(), queries.size() == 1 ? "y" : "ies"));
      for (const auto& q : queries) {
        if (rng.Uniform() < ratio && dataset.IsLabeled(q)) {
          split.validation_queries.insert(q);
        } else {
          split.test_queries.insert(q);
        }
      }
      continue;
    }
    std::vector<QueryId> labeled;
    for (const auto& q : queries) {
      if (dataset.IsLabeled(q)) labeled.push_back(q);
    }
    for (std::size_t i = labeled.size(); i > 1; --i) {
      std::swap(labeled[i - 1], labeled[rng.Index(i)]);
    }
    const auto wanted = static_cast<std::size_t>(
        std::lround(ratio * static_cast<double>(queries.size())));
    const std::size_t take = std::min(wanted, labeled.size());
    split.validation_queries.insert(labeled.begin(), labeled.begin() + take);
    for (const auto& q : queries) {
      if (!split.validation_queries.contains(q)) split.test_queries.insert(q);
    }
  }
  return split;
}

}  // namespace relci
