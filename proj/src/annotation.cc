#include "dsd/annotation.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "dsd/error.h"

namespace dsd {
namespace {

using Json = nlohmann::json;

MeanStd Summarize(const std::vector<double>& values) {
  MeanStd out;
  out.n = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(sq / static_cast<double>(values.size()));
  return out;
}

std::optional<MeanStd> SummarizeOrNone(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  return Summarize(values);
}

// annotator -> post -> round-1 labels
using RoundOneIndex = std::map<std::string, std::map<std::string, LabelSet>>;

RoundOneIndex IndexRoundOne(std::span<const AnnotationRecord> records) {
  RoundOneIndex index;
  for (const auto& r : records) {
    if (r.round == 1) index[r.annotator_id][r.post_id] = r.labels;
  }
  return index;
}

}  // namespace

std::vector<AnnotationRecord> ReadAnnotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::vector<AnnotationRecord> out;
  std::set<std::tuple<std::string, std::string, int>> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    AnnotationRecord r;
    try {
      Json j = Json::parse(line);
      if (j.contains("event") && j["event"] != "annotation") continue;
      r.annotator_id = j.at("annotator_id").get<std::string>();
      r.post_id = j.at("post_id").get<std::string>();
      r.labels = LabelSet(j.at("labels").get<std::vector<LabelId>>());
      r.round = j.value("round", 1);
      r.is_clinician = j.value("is_clinician", false);
      r.clinician_rank = j.value("clinician_rank", 0);
      r.timestamp = j.value("timestamp", std::string{});
    } catch (const Json::exception& e) {
      throw Error(Errc::kIo, where + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what(), e.detail());
    }
    if (auto rule = r.labels.Violation()) {
      throw Error(Errc::kInvalidLabels, where + "label set " + r.labels.ToString() +
                                            " violates rule " + *rule,
                  *rule);
    }
    if (r.round < 1 || r.clinician_rank < 0) {
      throw Error(Errc::kInvalidArgument, where + "round must be >= 1 and rank >= 0");
    }
    if (!seen.emplace(r.annotator_id, r.post_id, r.round).second) {
      throw Error(Errc::kConflict, where + "repeated (annotator, post, round)",
                  r.annotator_id + "/" + r.post_id + "/" + std::to_string(r.round));
    }
    out.push_back(std::move(r));
  }
  return out;
}

void WriteAnnotations(const std::filesystem::path& path,
                      std::span<const AnnotationRecord> records) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  for (const auto& r : records) {
    Json j = {{"annotator_id", r.annotator_id},
              {"post_id", r.post_id},
              {"labels", r.labels.ids()},
              {"round", r.round},
              {"is_clinician", r.is_clinician},
              {"clinician_rank", r.clinician_rank},
              {"timestamp", r.timestamp}};
    out << j.dump() << '\n';
  }
}

std::optional<LabelSet> MvcpAggregate(std::span<const AnnotationRecord> records,
                                      int n_annotators) {
  if (records.empty()) {
    throw Error(Errc::kNoAnnotations, "no annotations for post");
  }
  if (n_annotators < 1) {
    throw Error(Errc::kInvalidArgument, "n_annotators must be >= 1");
  }
  std::map<std::string, const AnnotationRecord*> by_annotator;
  for (const auto& r : records) {
    if (r.post_id != records.front().post_id) {
      throw Error(Errc::kInvalidArgument, "records span several posts",
                  records.front().post_id + "," + r.post_id);
    }
    if (r.round != 1) continue;
    r.labels.Validate();
    if (!by_annotator.emplace(r.annotator_id, &r).second) {
      throw Error(Errc::kInvalidArgument,
                  "duplicate round-1 annotation by " + r.annotator_id,
                  r.post_id);
    }
  }
  if (by_annotator.empty()) {
    throw Error(Errc::kNoAnnotations, "no round-1 annotations for post",
                records.front().post_id);
  }
  if (static_cast<int>(by_annotator.size()) > n_annotators) {
    throw Error(Errc::kInvalidArgument,
                "more annotators than the declared panel size");
  }

  std::array<int, label::kLast + 1> votes{};
  for (const auto& [id, r] : by_annotator) {
    for (LabelId l : r->labels.ids()) ++votes[l];
  }
  LabelSet majority;
  for (LabelId l = label::kFirst; l <= label::kLast; ++l) {
    if (2 * votes[l] > n_annotators) majority.insert(l);
  }

  if (!majority.empty()) {
    LabelSet regular;
    int best_regular = 0;
    LabelId best_special = 0;
    for (LabelId l : majority.ids()) {
      if (l == label::kNoEvidenceOfDepression || l == label::kGibberish) {
        if (best_special == 0 || votes[l] > votes[best_special]) best_special = l;
      } else {
        regular.insert(l);
        best_regular = std::max(best_regular, votes[l]);
      }
    }
    if (best_special == 0) return majority;
    // Singleton repair: the special label wins only with strictly more votes.
    if (regular.empty() || votes[best_special] > best_regular) {
      return LabelSet{best_special};
    }
    return regular;
  }

  const AnnotationRecord* clinician = nullptr;
  for (const auto& [id, r] : by_annotator) {
    if (!r->is_clinician) continue;
    if (clinician == nullptr || r->clinician_rank < clinician->clinician_rank) {
      clinician = r;
    }
  }
  if (clinician == nullptr) return std::nullopt;
  return clinician->labels;
}

std::map<std::string, std::optional<LabelSet>> MvcpAggregateAll(
    std::span<const AnnotationRecord> records, int n_annotators) {
  std::map<std::string, std::vector<AnnotationRecord>> by_post;
  for (const auto& r : records) by_post[r.post_id].push_back(r);
  std::map<std::string, std::optional<LabelSet>> out;
  for (const auto& [post, group] : by_post) {
    bool has_round_one = std::any_of(group.begin(), group.end(),
                                     [](const auto& r) { return r.round == 1; });
    if (!has_round_one) continue;
    out[post] = MvcpAggregate(group, n_annotators);
  }
  return out;
}

int CountAnnotators(std::span<const AnnotationRecord> records) {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.annotator_id);
  return static_cast<int>(ids.size());
}

double CohenKappaBinary(std::span<const std::uint8_t> a,
                        std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::kLengthMismatch, "kappa inputs differ in length");
  }
  if (a.empty()) throw Error(Errc::kInvalidArgument, "kappa needs >= 1 item");
  // Integer counts keep the degenerate test exact.
  std::int64_t n = static_cast<std::int64_t>(a.size());
  std::int64_t agree = 0;
  std::int64_t a1 = 0;
  std::int64_t b1 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    bool x = a[i] != 0;
    bool y = b[i] != 0;
    agree += x == y;
    a1 += x;
    b1 += y;
  }
  std::int64_t chance = a1 * b1 + (n - a1) * (n - b1);  // n^2 * p_e
  if (chance == n * n) return agree == n ? 1.0 : 0.0;
  return static_cast<double>(n * agree - chance) /
         static_cast<double>(n * n - chance);
}

KappaReport ComputeKappaReport(
    std::span<const AnnotationRecord> records,
    const std::map<std::string, std::optional<LabelSet>>& mvcp_labels) {
  const RoundOneIndex index = IndexRoundOne(records);
  std::vector<std::string> annotators;
  for (const auto& [id, posts] : index) annotators.push_back(id);

  KappaReport report;
  for (LabelId l = label::kFirst; l <= label::kLast; ++l) {
    KappaRow row;
    row.label = l;
    bool used = false;
    for (const auto& [id, posts] : index) {
      for (const auto& [post, labels] : posts) used = used || labels.contains(l);
    }
    for (const auto& [post, labels] : mvcp_labels) {
      used = used || (labels && labels->contains(l));
    }
    if (!used) {
      report.rows.push_back(row);
      continue;
    }

    std::vector<double> pair_values;
    for (std::size_t i = 0; i < annotators.size(); ++i) {
      for (std::size_t j = i + 1; j < annotators.size(); ++j) {
        const auto& pi = index.at(annotators[i]);
        const auto& pj = index.at(annotators[j]);
        PresenceVector a, b;
        for (const auto& [post, labels] : pi) {
          auto it = pj.find(post);
          if (it == pj.end()) continue;
          a.push_back(labels.contains(l));
          b.push_back(it->second.contains(l));
        }
        if (!a.empty()) pair_values.push_back(CohenKappaBinary(a, b));
      }
    }

    std::vector<double> mvcp_values;
    for (const auto& id : annotators) {
      PresenceVector a, b;
      for (const auto& [post, labels] : index.at(id)) {
        auto it = mvcp_labels.find(post);
        if (it == mvcp_labels.end() || !it->second) continue;
        a.push_back(labels.contains(l));
        b.push_back(it->second->contains(l));
      }
      if (!a.empty()) mvcp_values.push_back(CohenKappaBinary(a, b));
    }

    std::vector<double> pooled = pair_values;
    pooled.insert(pooled.end(), mvcp_values.begin(), mvcp_values.end());
    row.annotator_pairs = SummarizeOrNone(pair_values);
    row.annotator_vs_mvcp = SummarizeOrNone(mvcp_values);
    row.all = SummarizeOrNone(pooled);
    report.rows.push_back(row);
  }
  return report;
}

std::string KappaReportCsv(const KappaReport& report) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "label,name,annots_mean,annots_std,annots_mvcp_mean,annots_mvcp_std,"
         "all_mean,all_std\n";
  auto cell = [&](const std::optional<MeanStd>& c) {
    if (c) {
      out << ',' << c->mean << ',' << c->std;
    } else {
      out << ",NA,NA";
    }
  };
  for (const auto& row : report.rows) {
    out << row.label << ',' << LabelName(row.label);
    cell(row.annotator_pairs);
    cell(row.annotator_vs_mvcp);
    cell(row.all);
    out << '\n';
  }
  return out.str();
}

double TestRetestReliability(std::span<const AnnotationRecord> records) {
  const RoundOneIndex index = IndexRoundOne(records);
  std::size_t total = 0;
  std::size_t same = 0;
  for (const auto& r : records) {
    if (r.round <= 1) continue;
    auto a = index.find(r.annotator_id);
    if (a == index.end()) continue;
    auto p = a->second.find(r.post_id);
    if (p == a->second.end()) continue;
    ++total;
    same += p->second == r.labels;
  }
  if (total == 0) {
    throw Error(Errc::kNoRetestData, "no duplicated assignments to compare");
  }
  return static_cast<double>(same) / static_cast<double>(total);
}

}  // namespace dsd
