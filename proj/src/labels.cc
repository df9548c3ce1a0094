#include "dsd/labels.h"

#include <array>
#include <charconv>
#include <sstream>

#include "dsd/error.h"

namespace dsd {
namespace {

constexpr std::array<std::string_view, label::kLast + 1> kNames = {
    "",
    "Anhedonia",
    "Low mood",
    "Change in sleep pattern",
    "Fatigue",
    "Weight change",
    "Feelings of worthlessness",
    "Indecisiveness",
    "Agitation",
    "Retardation",
    "Suicidal thoughts",
    "ED",
    "NoED",
    "Gibberish",
};

void CheckId(LabelId id) {
  if (!IsValidLabel(id)) {
    throw Error(Errc::kInvalidLabels,
                "label index out of range: " + std::to_string(id),
                "label-range");
  }
}

int ParseInt(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(Errc::kInvalidArgument,
                "not a label index: '" + std::string(s) + "'");
  }
  return value;
}

}  // namespace

std::string_view LabelName(LabelId id) {
  CheckId(id);
  return kNames[id];
}

std::vector<LabelId> SymptomLabels() {
  std::vector<LabelId> out;
  for (LabelId id = label::kFirst; id <= label::kLastSymptom; ++id) {
    out.push_back(id);
  }
  return out;
}

std::vector<LabelId> AllLabels() {
  std::vector<LabelId> out;
  for (LabelId id = label::kFirst; id <= label::kLast; ++id) out.push_back(id);
  return out;
}

std::vector<LabelId> ParseLabelList(std::string_view text) {
  std::vector<LabelId> out;
  LabelSet seen;
  while (!text.empty()) {
    auto comma = text.find(',');
    std::string_view part = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{}
                                           : text.substr(comma + 1);
    if (part.empty()) continue;
    auto dash = part.find('-');
    int lo = 0;
    int hi = 0;
    if (dash == std::string_view::npos) {
      lo = hi = ParseInt(part);
    } else {
      lo = ParseInt(part.substr(0, dash));
      hi = ParseInt(part.substr(dash + 1));
    }
    if (lo > hi) {
      throw Error(Errc::kInvalidArgument,
                  "empty label range: " + std::string(part));
    }
    for (int id = lo; id <= hi; ++id) {
      CheckId(id);
      if (!seen.contains(id)) out.push_back(id);
      seen.insert(id);
    }
  }
  if (out.empty()) throw Error(Errc::kInvalidArgument, "empty label list");
  return out;
}

LabelSet::LabelSet(std::initializer_list<LabelId> ids) {
  for (LabelId id : ids) insert(id);
}

LabelSet::LabelSet(std::span<const LabelId> ids) {
  for (LabelId id : ids) insert(id);
}

void LabelSet::insert(LabelId id) {
  CheckId(id);
  bits_.set(static_cast<std::size_t>(id));
}

void LabelSet::erase(LabelId id) {
  if (IsValidLabel(id)) bits_.reset(static_cast<std::size_t>(id));
}

bool LabelSet::contains(LabelId id) const {
  return IsValidLabel(id) && bits_.test(static_cast<std::size_t>(id));
}

std::vector<LabelId> LabelSet::ids() const {
  std::vector<LabelId> out;
  for (LabelId id = label::kFirst; id <= label::kLast; ++id) {
    if (bits_.test(static_cast<std::size_t>(id))) out.push_back(id);
  }
  return out;
}

LabelSet& LabelSet::operator|=(const LabelSet& other) {
  bits_ |= other.bits_;
  return *this;
}

bool LabelSet::IsSubsetOf(const LabelSet& other) const {
  return (bits_ & ~other.bits_).none();
}

bool LabelSet::HasSymptom() const { return !SymptomsOnly().empty(); }

LabelSet LabelSet::SymptomsOnly() const {
  LabelSet out;
  for (LabelId id = label::kFirst; id <= label::kLastSymptom; ++id) {
    if (contains(id)) out.insert(id);
  }
  return out;
}

std::optional<std::string> LabelSet::Violation() const {
  if (size() > 1 && contains(label::kNoEvidenceOfDepression)) {
    return "noed-singleton";
  }
  if (size() > 1 && contains(label::kGibberish)) return "gibberish-singleton";
  return std::nullopt;
}

void LabelSet::Validate() const {
  if (auto rule = Violation()) {
    throw Error(Errc::kInvalidLabels,
                "label set " + ToString() + " violates rule " + *rule, *rule);
  }
}

std::string LabelSet::ToString() const {
  std::ostringstream out;
  out << '{';
  bool first = true;
  for (LabelId id : ids()) {
    if (!first) out << ',';
    out << id;
    first = false;
  }
  out << '}';
  return out.str();
}

}  // namespace dsd
