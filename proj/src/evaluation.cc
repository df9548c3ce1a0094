#include "dsd/evaluation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "dsd/error.h"
#include "dsd/normalizer.h"

namespace dsd {
namespace {

double SafeDiv(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

EvalReport ClassificationReport(std::span<const LabelSet> gold,
                                std::span<const LabelSet> pred,
                                std::span<const LabelId> labels) {
  if (gold.size() != pred.size()) {
    throw Error(Errc::kLengthMismatch, "gold and predictions differ in length");
  }
  EvalReport report;
  for (LabelId l : labels) {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      bool g = gold[i].contains(l);
      bool p = pred[i].contains(l);
      tp += g && p;
      fp += !g && p;
      fn += g && !p;
    }
    LabelMetrics m;
    m.label = l;
    m.precision = SafeDiv(tp, tp + fp);
    m.recall = SafeDiv(tp, tp + fn);
    m.f1 = SafeDiv(2.0 * m.precision * m.recall, m.precision + m.recall);
    m.support = tp + fn;
    report.rows.push_back(m);
    report.total_support += m.support;
  }
  if (report.rows.empty()) return report;
  const double n = static_cast<double>(report.rows.size());
  for (const auto& m : report.rows) {
    report.macro.precision += m.precision / n;
    report.macro.recall += m.recall / n;
    report.macro.f1 += m.f1 / n;
  }
  if (report.total_support > 0) {
    const double total = report.total_support;
    for (const auto& m : report.rows) {
      report.weighted.precision += m.precision * m.support / total;
      report.weighted.recall += m.recall * m.support / total;
      report.weighted.f1 += m.f1 * m.support / total;
    }
  }
  return report;
}

std::string ReportText(const EvalReport& report) {
  std::size_t name_width = 12;
  for (const auto& m : report.rows) {
    name_width = std::max(name_width, LabelName(m.label).size() + 4);
  }
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << std::left << std::setw(static_cast<int>(name_width)) << "label" << std::right
      << std::setw(10) << "precision" << std::setw(10) << "recall" << std::setw(10)
      << "f1-score" << std::setw(10) << "support" << '\n';
  for (const auto& m : report.rows) {
    std::string name = std::to_string(m.label) + " " + std::string(LabelName(m.label));
    out << std::left << std::setw(static_cast<int>(name_width)) << name << std::right
        << std::setw(10) << m.precision << std::setw(10) << m.recall << std::setw(10)
        << m.f1 << std::setw(10) << m.support << '\n';
  }
  out << '\n';
  auto avg = [&](const char* name, const AveragedMetrics& a) {
    out << std::left << std::setw(static_cast<int>(name_width)) << name << std::right
        << std::setw(10) << a.precision << std::setw(10) << a.recall << std::setw(10)
        << a.f1 << std::setw(10) << report.total_support << '\n';
  };
  avg("macro avg", report.macro);
  avg("weighted avg", report.weighted);
  return out.str();
}

std::string ReportCsv(const EvalReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "label,name,precision,recall,f1,support\n";
  for (const auto& m : report.rows) {
    out << m.label << ',' << LabelName(m.label) << ',' << m.precision << ','
        << m.recall << ',' << m.f1 << ',' << m.support << '\n';
  }
  out << "macro,," << report.macro.precision << ',' << report.macro.recall << ','
      << report.macro.f1 << ',' << report.total_support << '\n';
  out << "weighted,," << report.weighted.precision << ',' << report.weighted.recall
      << ',' << report.weighted.f1 << ',' << report.total_support << '\n';
  return out.str();
}

std::vector<LabelCount> LabelDistribution(std::span<const LabelSet> dataset) {
  std::vector<LabelCount> out;
  for (LabelId l : AllLabels()) {
    LabelCount c;
    c.label = l;
    for (const auto& s : dataset) c.count += s.contains(l);
    c.ratio = SafeDiv(c.count, static_cast<double>(dataset.size()));
    out.push_back(c);
  }
  return out;
}

std::string DistributionCsv(const std::vector<LabelCount>& distribution) {
  std::ostringstream out;
  out << "label,name,count,ratio\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& c : distribution) {
    out << c.label << ',' << LabelName(c.label) << ',' << c.count << ',' << c.ratio
        << '\n';
  }
  return out.str();
}

double TotalVariationDistance(const std::vector<LabelCount>& a,
                              const std::vector<LabelCount>& b) {
  std::map<LabelId, std::pair<double, double>> mass;
  double sum_a = 0.0;
  double sum_b = 0.0;
  for (const auto& c : a) {
    mass[c.label].first += c.count;
    sum_a += c.count;
  }
  for (const auto& c : b) {
    mass[c.label].second += c.count;
    sum_b += c.count;
  }
  double tv = 0.0;
  for (const auto& [label, m] : mass) {
    tv += std::abs(SafeDiv(m.first, sum_a) - SafeDiv(m.second, sum_b));
  }
  return tv / 2.0;
}

std::vector<BigramCount> TopBigrams(std::span<const Post> dataset, LabelId label,
                                    int k, const std::set<std::string>& stopwords) {
  if (k < 1) throw Error(Errc::kInvalidArgument, "k must be >= 1");
  std::map<std::string, int> counts;
  for (const auto& post : dataset) {
    if (!post.labels || !post.labels->contains(label)) continue;
    std::vector<const std::string*> kept;
    for (const auto& t : post.tokens) {
      if (IsRetainedPunctuation(t) || stopwords.count(t)) continue;
      kept.push_back(&t);
    }
    for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
      ++counts[*kept[i] + " " + *kept[i + 1]];
    }
  }
  std::vector<BigramCount> out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;  // map order already lexicographic
  });
  if (out.size() > static_cast<std::size_t>(k)) out.resize(static_cast<std::size_t>(k));
  return out;
}

std::set<std::string> LoadStopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    auto last = line.find_last_not_of(" \t");
    out.insert(line.substr(first, last - first + 1));
  }
  return out;
}

}  // namespace dsd
