#include "dsd/store.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dsd/error.h"
#include "dsd/normalizer.h"

namespace dsd {
namespace {

using Json = nlohmann::json;

Post PostFromJson(const Json& j) {
  Post p;
  p.id = j.at("id").get<std::string>();
  if (p.id.empty()) throw Error(Errc::kInvalidArgument, "empty post id");
  p.text = j.value("text", std::string{});
  if (j.contains("tokens")) {
    p.tokens = j["tokens"].get<std::vector<std::string>>();
  } else {
    p.tokens = SplitWhitespace(p.text);
  }
  if (j.contains("labels") && !j["labels"].is_null()) {
    LabelSet labels(j["labels"].get<std::vector<LabelId>>());
    labels.Validate();
    p.labels = labels;
  }
  p.provenance = j.value("provenance", std::string{});
  p.source = j.value("source", std::string{});
  return p;
}

Json PostToJson(const Post& p) {
  Json j = {{"id", p.id}, {"text", p.text}, {"tokens", p.tokens}};
  if (p.labels) j["labels"] = p.labels->ids();
  j["provenance"] = p.provenance;
  j["source"] = p.source;
  return j;
}

}  // namespace

Dataset ParseDataset(std::string_view jsonl, const std::string& origin) {
  Dataset out;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= jsonl.size()) {
    std::size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    Post p;
    try {
      p = PostFromJson(Json::parse(line));
    } catch (const Json::exception& e) {
      throw Error(Errc::kIo, origin + ":" + std::to_string(line_no) + ": " +
                                 e.what());
    } catch (const Error& e) {
      throw Error(e.code(), origin + ":" + std::to_string(line_no) + ": " +
                                e.what(), e.detail());
    }
    if (!seen.insert(p.id).second) {
      throw Error(Errc::kInvalidArgument, origin + ": duplicate id " + p.id, p.id);
    }
    out.push_back(std::move(p));
  }
  return out;
}

Dataset ReadDataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseDataset(buffer.str(), path.string());
}

std::string FormatDataset(std::span<const Post> posts) {
  std::string out;
  for (const auto& p : posts) {
    out += PostToJson(p).dump();
    out += '\n';
  }
  return out;
}

void WriteFileAtomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::kIo, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(Errc::kIo, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void WriteDataset(const std::filesystem::path& path, std::span<const Post> posts) {
  WriteFileAtomic(path, FormatDataset(posts));
}

std::set<std::string> Ids(std::span<const Post> posts) {
  std::set<std::string> out;
  for (const auto& p : posts) out.insert(p.id);
  return out;
}

std::vector<LabelSet> LabelsOrEmpty(std::span<const Post> posts) {
  std::vector<LabelSet> out;
  out.reserve(posts.size());
  for (const auto& p : posts) out.push_back(p.labels.value_or(LabelSet{}));
  return out;
}

Dataset Union(std::span<const Post> a, std::span<const Post> b) {
  Dataset out;
  std::map<std::string, std::size_t> index;
  std::vector<std::string> conflicts;
  auto add = [&](const Post& p) {
    auto [it, fresh] = index.emplace(p.id, out.size());
    if (fresh) {
      out.push_back(p);
      return;
    }
    const Post& kept = out[it->second];
    if (kept.labels && p.labels && !(*kept.labels == *p.labels)) {
      conflicts.push_back(p.id);
    }
  };
  for (const auto& p : a) add(p);
  for (const auto& p : b) add(p);
  if (!conflicts.empty()) {
    std::string ids;
    for (const auto& id : conflicts) ids += (ids.empty() ? "" : ",") + id;
    throw Error(Errc::kConflict,
                std::to_string(conflicts.size()) +
                    " id(s) carry conflicting labels",
                ids);
  }
  return out;
}

Dataset Subtract(std::span<const Post> a, std::span<const Post> b) {
  const std::set<std::string> drop = Ids(b);
  Dataset out;
  for (const auto& p : a) {
    if (!drop.count(p.id)) out.push_back(p);
  }
  return out;
}

Dataset SampleControls(std::span<const Post> pool, std::size_t n,
                       std::uint64_t seed) {
  if (pool.size() < n) {
    throw Error(Errc::kInvalidArgument,
                "control pool has " + std::to_string(pool.size()) +
                    " posts, " + std::to_string(n) + " requested");
  }
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  Dataset out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool[order[i]]);
  return out;
}

}  // namespace dsd
