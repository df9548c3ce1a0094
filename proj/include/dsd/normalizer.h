#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace dsd {

struct RawPost {
  std::string id;
  std::string text;
  std::string source;  // seed-human, candidate-pool, external
};

struct NormalizedPost {
  std::string id;
  std::vector<std::string> tokens;
  std::string text;  // tokens joined by single spaces
};

enum class DropReason { kSelfDisclosure };

struct Dropped {
  std::string id;
  DropReason reason;
};

using NormalizeResult = std::variant<NormalizedPost, Dropped>;

// Contracted surface form -> expansion ("i've" -> "i have"). Keys are
// lowercase; expansions must be lowercase ASCII words separated by single
// spaces, must not themselves be keys, and must not contain runs of three
// identical letters, so that normalization stays idempotent.
class ContractionMap {
 public:
  ContractionMap() = default;

  // Parses "surface<TAB>expansion" lines; blank lines and lines starting
  // with '#' are skipped.
  static ContractionMap Parse(std::string_view tsv);
  static ContractionMap Load(const std::filesystem::path& path);

  void Add(std::string surface, std::string expansion);

  // Expansion words, or nullptr when `token` is not a contracted form.
  const std::vector<std::string>* Find(const std::string& token) const;

  // Single-letter words emitted by some expansion ("i"). These survive the
  // one-character-word rule.
  const std::set<std::string>& protected_words() const { return protected_; }

  std::size_t size() const { return map_.size(); }

 private:
  std::unordered_map<std::string, std::vector<std::string>> map_;
  std::set<std::string> protected_;
};

struct NormalizerOptions {
  bool drop_on_disclosure = true;
};

// Tweet normalizer. Stages, in execution order:
//   lowercase (ASCII; U+2018/U+2019 become an ASCII apostrophe)
//   self-disclosure drop: any word "diagnosed"/"diagnosis"
//   URLs and hashtags removed as whole units from whitespace chunks
//   tokenization: punctuation other than apostrophes becomes its own token
//   digits removed; one-character words removed
//   contractions expanded
//   runs of >= 3 identical letters collapsed to one
//   punctuation removed except . , ? !
//   non-ASCII code points (emojis included) removed
// Tokens changed by punctuation or non-ASCII removal go through the digit,
// contraction and elongation rules again, and the disclosure check is
// repeated on the final tokens.
class Normalizer {
 public:
  explicit Normalizer(ContractionMap contractions,
                      NormalizerOptions options = {});

  NormalizeResult Normalize(const RawPost& post) const;
  NormalizeResult Normalize(std::string_view text) const;
  // Same pipeline with the self-disclosure drop disabled.
  NormalizedPost NormalizeKeepingDisclosure(std::string_view text) const;

  const ContractionMap& contractions() const { return contractions_; }

 private:
  NormalizeResult Run(std::string_view text, bool drop_on_disclosure) const;

  ContractionMap contractions_;
  NormalizerOptions options_;
};

// Word-boundary check for "diagnosed"/"diagnosis" on lowercased text.
bool ContainsSelfDisclosure(std::string_view lowercase_text);

bool IsRetainedPunctuation(std::string_view token);

// True iff fewer than three non-punctuation tokens.
bool ShortPostFlag(const NormalizedPost& post);

std::string JoinTokens(const std::vector<std::string>& tokens);
std::vector<std::string> SplitWhitespace(std::string_view text);

}  // namespace dsd
