#include "dsd/normalizer.h"

#include <fstream>
#include <sstream>

#include "dsd/error.h"

namespace dsd {
namespace {

bool IsAsciiSpace(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}
bool IsAsciiAlnum(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9');
}
bool IsAsciiLower(unsigned char c) { return c >= 'a' && c <= 'z'; }
bool IsDigit(unsigned char c) { return c >= '0' && c <= '9'; }
bool IsNonAscii(unsigned char c) { return c >= 0x80; }
bool IsWordByte(unsigned char c) {
  return IsAsciiAlnum(c) || c == '\'' || IsNonAscii(c);
}
bool IsRetainedChar(unsigned char c) {
  return c == '.' || c == ',' || c == '?' || c == '!';
}

std::string LowercaseAscii(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto c = static_cast<unsigned char>(text[i]);
    // U+2018 / U+2019 (E2 80 98 / E2 80 99) act as apostrophes.
    if (c == 0xE2 && i + 2 < text.size() &&
        static_cast<unsigned char>(text[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(text[i + 2]) == 0x98 ||
         static_cast<unsigned char>(text[i + 2]) == 0x99)) {
      out.push_back('\'');
      i += 2;
      continue;
    }
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                       : static_cast<char>(c));
  }
  return out;
}

std::size_t CodePointCount(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

bool HasTripleRun(std::string_view word) {
  for (std::size_t i = 2; i < word.size(); ++i) {
    if (IsAsciiLower(static_cast<unsigned char>(word[i])) &&
        word[i] == word[i - 1] && word[i] == word[i - 2]) {
      return true;
    }
  }
  return false;
}

// Any run of >= 3 identical letters becomes a single letter.
std::string CollapseElongation(std::string_view word) {
  std::string out;
  out.reserve(word.size());
  std::size_t i = 0;
  while (i < word.size()) {
    std::size_t j = i + 1;
    while (j < word.size() && word[j] == word[i]) ++j;
    std::size_t run = j - i;
    if (run >= 3 && IsAsciiLower(static_cast<unsigned char>(word[i]))) {
      out.push_back(word[i]);
    } else {
      out.append(word.substr(i, run));
    }
    i = j;
  }
  return out;
}

// URL and hashtag removal on one whitespace chunk.
std::string StripUrlsAndHashtags(std::string chunk) {
  auto boundary_before = [&](std::size_t pos) {
    return pos == 0 || !IsAsciiAlnum(static_cast<unsigned char>(chunk[pos - 1]));
  };
  for (std::size_t pos = 0; pos < chunk.size(); ++pos) {
    std::string_view rest(chunk.data() + pos, chunk.size() - pos);
    if (rest.starts_with("http://") || rest.starts_with("https://") ||
        (rest.starts_with("www.") && boundary_before(pos))) {
      chunk.erase(pos);
      break;
    }
  }
  std::string out;
  out.reserve(chunk.size());
  for (std::size_t pos = 0; pos < chunk.size();) {
    auto c = static_cast<unsigned char>(chunk[pos]);
    bool tag_follows =
        pos + 1 < chunk.size() &&
        (IsAsciiAlnum(static_cast<unsigned char>(chunk[pos + 1])) ||
         chunk[pos + 1] == '_' ||
         IsNonAscii(static_cast<unsigned char>(chunk[pos + 1])));
    if (c == '#' && tag_follows && boundary_before(pos)) {
      ++pos;
      while (pos < chunk.size()) {
        auto t = static_cast<unsigned char>(chunk[pos]);
        if (!(IsAsciiAlnum(t) || t == '_' || IsNonAscii(t))) break;
        ++pos;
      }
      continue;
    }
    out.push_back(static_cast<char>(c));
    ++pos;
  }
  return out;
}

struct Token {
  std::string text;
  bool word = false;
  bool expanded = false;  // emitted by rule 3; already in final form
};

// Word tokens are runs of ASCII alphanumerics, apostrophes and non-ASCII
// bytes; every other non-space ASCII byte is a one-character punctuation
// token.
void Tokenize(std::string_view chunk, std::vector<Token>& out) {
  std::size_t i = 0;
  while (i < chunk.size()) {
    auto c = static_cast<unsigned char>(chunk[i]);
    if (IsWordByte(c)) {
      std::size_t j = i;
      while (j < chunk.size() && IsWordByte(static_cast<unsigned char>(chunk[j]))) {
        ++j;
      }
      out.push_back({std::string(chunk.substr(i, j - i)), true});
      i = j;
    } else {
      out.push_back({std::string(1, static_cast<char>(c)), false});
      ++i;
    }
  }
}

bool IsDisclosureWord(std::string_view w) {
  return w == "diagnosed" || w == "diagnosis";
}

}  // namespace

ContractionMap ContractionMap::Parse(std::string_view tsv) {
  ContractionMap map;
  std::istringstream in{std::string(tsv)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(Errc::kConfig, "contraction map line " +
                                     std::to_string(line_no) +
                                     ": expected surface<TAB>expansion");
    }
    map.Add(line.substr(0, tab), line.substr(tab + 1));
  }
  for (const auto& [surface, words] : map.map_) {
    for (const auto& w : words) {
      if (map.map_.count(w)) {
        throw Error(Errc::kConfig, "expansion of '" + surface +
                                       "' contains contracted form '" + w +
                                       "'");
      }
    }
  }
  return map;
}

ContractionMap ContractionMap::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return Parse(buf.str());
}

void ContractionMap::Add(std::string surface, std::string expansion) {
  surface = LowercaseAscii(surface);
  auto words = SplitWhitespace(LowercaseAscii(expansion));
  if (surface.empty() || words.empty()) {
    throw Error(Errc::kConfig, "empty contraction entry");
  }
  for (const auto& w : words) {
    for (unsigned char c : w) {
      if (!IsAsciiLower(c)) {
        throw Error(Errc::kConfig, "expansion word '" + w +
                                       "' must be lowercase ASCII letters");
      }
    }
    if (HasTripleRun(w)) {
      throw Error(Errc::kConfig, "expansion word '" + w +
                                     "' contains an elongated run");
    }
    if (w.size() == 1) protected_.insert(w);
  }
  map_[surface] = std::move(words);
}

const std::vector<std::string>* ContractionMap::Find(
    const std::string& token) const {
  auto it = map_.find(token);
  return it == map_.end() ? nullptr : &it->second;
}

Normalizer::Normalizer(ContractionMap contractions, NormalizerOptions options)
    : contractions_(std::move(contractions)), options_(options) {}

NormalizeResult Normalizer::Normalize(const RawPost& post) const {
  NormalizeResult result = Normalize(post.text);
  std::visit([&](auto& r) { r.id = post.id; }, result);
  return result;
}

NormalizeResult Normalizer::Normalize(std::string_view text) const {
  return Run(text, options_.drop_on_disclosure);
}

NormalizedPost Normalizer::NormalizeKeepingDisclosure(std::string_view text) const {
  return std::get<NormalizedPost>(Run(text, false));
}

NormalizeResult Normalizer::Run(std::string_view raw, bool drop) const {
  // Lowercase.
  const std::string text = LowercaseAscii(raw);

  // Self-disclosure drop, ahead of any removal.
  if (drop && ContainsSelfDisclosure(text)) {
    return Dropped{{}, DropReason::kSelfDisclosure};
  }

  // URLs and hashtags, then tokenization.
  std::vector<Token> tokens;
  for (const auto& chunk : SplitWhitespace(text)) {
    Tokenize(StripUrlsAndHashtags(chunk), tokens);
  }

  const auto& keep = contractions_.protected_words();
  auto long_enough = [&](const std::string& w) {
    return !w.empty() && (CodePointCount(w) > 1 || keep.count(w));
  };

  // Digits and one-character words.
  std::vector<Token> stage;
  for (auto& t : tokens) {
    if (t.word) {
      std::erase_if(t.text, [](char c) { return IsDigit(static_cast<unsigned char>(c)); });
      if (!long_enough(t.text)) continue;
    }
    stage.push_back(std::move(t));
  }
  tokens.swap(stage);
  stage.clear();

  // Contractions.
  for (auto& t : tokens) {
    if (t.word) {
      if (const auto* expansion = contractions_.Find(t.text)) {
        for (const auto& w : *expansion) stage.push_back({w, true, true});
        continue;
      }
    }
    stage.push_back(std::move(t));
  }
  tokens.swap(stage);
  stage.clear();

  // Elongation.
  for (auto& t : tokens) {
    if (t.word) t.text = CollapseElongation(t.text);
  }

  // Punctuation and non-ASCII removal, then the closure pass: deletions and collapsing can
  // recreate a contracted form, an elongated run or a one-letter word.
  for (auto& t : tokens) {
    if (!t.word) {
      if (IsRetainedChar(static_cast<unsigned char>(t.text[0]))) {
        stage.push_back(std::move(t));
      }
      continue;
    }
    if (t.expanded) {
      stage.push_back(std::move(t));
      continue;
    }
    std::string cleaned;
    cleaned.reserve(t.text.size());
    for (char c : t.text) {
      auto u = static_cast<unsigned char>(c);
      if (u == '\'' || IsNonAscii(u)) continue;
      cleaned.push_back(c);
    }
    cleaned = CollapseElongation(cleaned);
    if (const auto* expansion = contractions_.Find(cleaned)) {
      for (const auto& w : *expansion) stage.push_back({w, true, true});
      continue;
    }
    if (long_enough(cleaned)) stage.push_back({std::move(cleaned), true});
  }
  tokens.swap(stage);

  NormalizedPost out;
  out.tokens.reserve(tokens.size());
  for (auto& t : tokens) {
    if (drop && IsDisclosureWord(t.text)) {
      return Dropped{{}, DropReason::kSelfDisclosure};
    }
    out.tokens.push_back(std::move(t.text));
  }
  out.text = JoinTokens(out.tokens);
  return out;
}

bool ContainsSelfDisclosure(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    if (!IsAsciiLower(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && IsAsciiLower(static_cast<unsigned char>(text[j]))) ++j;
    if (IsDisclosureWord(text.substr(i, j - i))) return true;
    i = j;
  }
  return false;
}

bool IsRetainedPunctuation(std::string_view token) {
  return token.size() == 1 &&
         IsRetainedChar(static_cast<unsigned char>(token[0]));
}

bool ShortPostFlag(const NormalizedPost& post) {
  std::size_t words = 0;
  for (const auto& t : post.tokens) {
    if (!IsRetainedPunctuation(t)) ++words;
  }
  return words < 3;
}

std::string JoinTokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::vector<std::string> SplitWhitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsAsciiSpace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !IsAsciiSpace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace dsd
