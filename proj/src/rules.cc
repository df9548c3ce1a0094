#include "dsd/rules.h"

#include <array>
#include <fstream>
#include <sstream>

#include "dsd/error.h"
#include "dsd/evaluation.h"
#include "dsd/store.h"

namespace dsd {
namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> ParseOptionalDouble(const std::string& s, int line_no) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::kIo, "rules line " + std::to_string(line_no) + ": bad number '" +
                             s + "'");
}

}  // namespace

std::vector<LabelRule> MineRules(std::span<const LabelSet> dataset,
                                 const LabelSet& weak, const LabelSet& strong) {
  if (dataset.empty()) throw Error(Errc::kEmptyDataset, "rule mining needs posts");
  for (LabelId l : weak.ids()) {
    if (strong.contains(l)) {
      throw Error(Errc::kInvalidArgument,
                  "label " + std::to_string(l) + " is both weak and strong");
    }
  }
  std::array<int, label::kLast + 1> count{};
  std::array<std::array<int, label::kLast + 1>, label::kLast + 1> both{};
  for (const auto& labels : dataset) {
    const auto ids = labels.ids();
    for (LabelId s : ids) {
      ++count[s];
      for (LabelId w : ids) ++both[s][w];
    }
  }
  const double n = static_cast<double>(dataset.size());
  std::vector<LabelRule> rules;
  for (LabelId s : strong.ids()) {
    for (LabelId w : weak.ids()) {
      if (both[s][w] == 0) continue;
      rules.push_back({s, w, both[s][w] / n,
                       static_cast<double>(both[s][w]) / count[s]});
    }
  }
  return rules;
}

LabelSet ApplyRules(const LabelSet& pred, std::span<const LabelRule> rules,
                    bool closure) {
  LabelSet out = pred;
  while (true) {
    LabelSet next = out;
    for (const auto& r : rules) {
      if (out.contains(r.antecedent)) next.insert(r.consequent);
    }
    bool changed = !(next == out);
    out = next;
    if (!closure || !changed) return out;
  }
}

StrengthSplit SplitByStrength(const EvalReport& report, double recall_floor) {
  StrengthSplit split;
  for (const auto& row : report.rows) {
    if (row.f1 == 0.0 || row.recall < recall_floor) {
      split.weak.insert(row.label);
    } else {
      split.strong.insert(row.label);
    }
  }
  return split;
}

std::vector<LabelRule> ParseRulesCsv(std::string_view csv) {
  std::vector<LabelRule> rules;
  std::istringstream in{std::string(csv)};
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("antecedent", 0) == 0) continue;
    }
    auto cells = SplitCsvLine(line);
    if (cells.size() < 2 || cells.size() > 4) {
      throw Error(Errc::kIo, "rules line " + std::to_string(line_no) +
                                 ": expected 2-4 columns");
    }
    cells.resize(4);
    LabelRule r;
    try {
      r.antecedent = std::stoi(cells[0]);
      r.consequent = std::stoi(cells[1]);
    } catch (const std::exception&) {
      throw Error(Errc::kIo, "rules line " + std::to_string(line_no) +
                                 ": bad label index");
    }
    if (!IsValidLabel(r.antecedent) || !IsValidLabel(r.consequent) ||
        r.antecedent == r.consequent) {
      throw Error(Errc::kInvalidLabels,
                  "rules line " + std::to_string(line_no) + ": invalid label pair");
    }
    r.support = ParseOptionalDouble(cells[2], line_no);
    r.confidence = ParseOptionalDouble(cells[3], line_no);
    rules.push_back(r);
  }
  return rules;
}

std::string FormatRulesCsv(std::span<const LabelRule> rules) {
  std::ostringstream out;
  out.precision(17);
  out << "antecedent,consequent,support,confidence\n";
  for (const auto& r : rules) {
    out << r.antecedent << ',' << r.consequent << ',';
    if (r.support) out << *r.support;
    out << ',';
    if (r.confidence) out << *r.confidence;
    out << '\n';
  }
  return out.str();
}

std::vector<LabelRule> LoadRules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseRulesCsv(buffer.str());
}

void SaveRules(const std::filesystem::path& path, std::span<const LabelRule> rules) {
  WriteFileAtomic(path, FormatRulesCsv(rules));
}

}  // namespace dsd
