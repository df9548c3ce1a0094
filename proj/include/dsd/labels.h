#pragma once

#include <bitset>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dsd {

// Label indices follow the numbered category list of the annotation
// guideline: 1-10 are symptoms, 11 ED, 12 NoED, 13 Gibberish.
using LabelId = int;

namespace label {
inline constexpr LabelId kAnhedonia = 1;
inline constexpr LabelId kLowMood = 2;
inline constexpr LabelId kSleepChange = 3;
inline constexpr LabelId kFatigue = 4;
inline constexpr LabelId kWeightChange = 5;
inline constexpr LabelId kWorthlessness = 6;
inline constexpr LabelId kIndecisiveness = 7;
inline constexpr LabelId kAgitation = 8;
inline constexpr LabelId kRetardation = 9;
inline constexpr LabelId kSuicidalThoughts = 10;
inline constexpr LabelId kEvidenceOfDepression = 11;
inline constexpr LabelId kNoEvidenceOfDepression = 12;
inline constexpr LabelId kGibberish = 13;

inline constexpr LabelId kFirst = 1;
inline constexpr LabelId kLast = 13;
inline constexpr LabelId kLastSymptom = 10;
}  // namespace label

constexpr bool IsValidLabel(LabelId id) {
  return id >= label::kFirst && id <= label::kLast;
}
constexpr bool IsSymptom(LabelId id) {
  return id >= label::kFirst && id <= label::kLastSymptom;
}

// Short display name ("Anhedonia", "Low mood", ...). Throws on invalid ids.
std::string_view LabelName(LabelId id);

// Labels 1..10 in order.
std::vector<LabelId> SymptomLabels();
// Labels 1..13 in order.
std::vector<LabelId> AllLabels();

// Parses "1-10", "1,3,5" or "2-4,8" into an ordered list of label ids.
std::vector<LabelId> ParseLabelList(std::string_view text);

// A subset of the 13-label taxonomy. Iteration order is ascending.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::initializer_list<LabelId> ids);
  explicit LabelSet(std::span<const LabelId> ids);

  void insert(LabelId id);
  void erase(LabelId id);
  bool contains(LabelId id) const;
  std::size_t size() const { return bits_.count(); }
  bool empty() const { return bits_.none(); }

  std::vector<LabelId> ids() const;

  LabelSet& operator|=(const LabelSet& other);
  friend LabelSet operator|(LabelSet a, const LabelSet& b) { return a |= b; }
  bool IsSubsetOf(const LabelSet& other) const;
  bool HasSymptom() const;
  LabelSet SymptomsOnly() const;

  // Name of the violated rule, or nullopt when the set is well formed.
  // NoED and Gibberish must each appear alone.
  std::optional<std::string> Violation() const;
  bool IsValid() const { return !Violation().has_value(); }
  // Throws Error(kInvalidLabels) naming the violated rule.
  void Validate() const;

  std::string ToString() const;

  friend bool operator==(const LabelSet& a, const LabelSet& b) {
    return a.bits_ == b.bits_;
  }

 private:
  std::bitset<label::kLast + 1> bits_;
};

}  // namespace dsd
