#include "dsd/guideline.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dsd/error.h"

namespace dsd {

using Json = nlohmann::json;

Guideline Guideline::Parse(std::string_view text) {
  Guideline g;
  try {
    Json j = Json::parse(text);
    for (const auto& item : j.at("labels")) {
      GuidelineEntry e;
      e.id = item.at("id").get<LabelId>();
      e.title = item.at("title").get<std::string>();
      e.lead = item.value("lead", std::string{});
      e.elaboration = item.value("elaboration", std::vector<std::string>{});
      e.examples = item.value("examples", std::vector<std::string>{});
      g.entries_.push_back(std::move(e));
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::kConfig, std::string("malformed guideline: ") + e.what());
  }
  std::sort(g.entries_.begin(), g.entries_.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  std::vector<LabelId> ids;
  for (const auto& e : g.entries_) ids.push_back(e.id);
  if (ids != AllLabels()) {
    throw Error(Errc::kIncompleteCorpus, "guideline must cover labels 1-13 once each");
  }
  return g;
}

Guideline Guideline::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str());
}

const GuidelineEntry& Guideline::at(LabelId id) const {
  if (!IsValidLabel(id)) {
    throw Error(Errc::kInvalidLabels, "no guideline entry for label " + std::to_string(id));
  }
  return entries_[static_cast<std::size_t>(id - label::kFirst)];
}

std::string Guideline::ToJson() const {
  Json labels = Json::array();
  for (const auto& e : entries_) {
    labels.push_back({{"id", e.id},
                      {"name", LabelName(e.id)},
                      {"title", e.title},
                      {"lead", e.lead},
                      {"elaboration", e.elaboration},
                      {"examples", e.examples}});
  }
  return Json{{"labels", labels}}.dump();
}

DescriptorCorpus DescriptorsFromGuideline(const Guideline& guideline) {
  DescriptorCorpus corpus;
  for (LabelId id : SymptomLabels()) {
    const GuidelineEntry& e = guideline.at(id);
    auto& list = corpus.descriptors[id];
    if (!e.lead.empty()) list.push_back(e.lead);
    list.insert(list.end(), e.elaboration.begin(), e.elaboration.end());
    list.insert(list.end(), e.examples.begin(), e.examples.end());
  }
  return corpus;
}

}  // namespace dsd
