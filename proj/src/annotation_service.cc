#include "dsd/annotation_service.h"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <numeric>
#include <random>

#include <httplib.h>
#include <json.hpp>

#include "dsd/config.h"
#include "dsd/embeddings.h"
#include "dsd/error.h"

namespace dsd {
namespace {

using Json = nlohmann::json;

std::string UtcTimestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Uniform double in [0, 1) from the top 53 bits.
double UnitInterval(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

Json RecordToJson(const AnnotationRecord& r) {
  return {{"event", "annotation"},
          {"annotator_id", r.annotator_id},
          {"post_id", r.post_id},
          {"labels", r.labels.ids()},
          {"round", r.round},
          {"is_clinician", r.is_clinician},
          {"clinician_rank", r.clinician_rank},
          {"timestamp", r.timestamp}};
}

Json MeanStdJson(const std::optional<MeanStd>& cell) {
  if (!cell) return nullptr;
  return {{"mean", cell->mean}, {"std", cell->std}, {"n", cell->n}};
}

}  // namespace

void PlanConfig::Validate() const {
  if (!(duplicate_rate >= 0.0 && duplicate_rate < 1.0)) {
    throw Error(Errc::kConfig, "duplicate_rate must lie in [0, 1)");
  }
  if (annotators.empty()) throw Error(Errc::kConfig, "plan registers no annotators");
  std::set<std::string> ids;
  for (const auto& a : annotators) {
    if (a.id.empty()) throw Error(Errc::kConfig, "empty annotator id");
    if (!ids.insert(a.id).second) {
      throw Error(Errc::kConfig, "annotator registered twice", a.id);
    }
    if (a.clinician_rank < 0) throw Error(Errc::kConfig, "clinician rank must be >= 0");
  }
}

PlanConfig PlanConfig::FromConfig(const Config& config,
                                  const std::filesystem::path& base_dir) {
  PlanConfig plan;
  plan.seed = static_cast<std::uint64_t>(config.GetInt("seed", 1));
  plan.duplicate_rate = config.GetDouble("duplicate_rate", plan.duplicate_rate);
  if (config.Has("journal")) {
    std::filesystem::path journal = config.GetString("journal", "");
    plan.journal = journal.is_absolute() || base_dir.empty() ? journal : base_dir / journal;
  }
  const std::string prefix = "annotator.";
  for (const auto& [key, value] : config.values()) {
    if (key.rfind(prefix, 0) != 0) {
      if (key != "seed" && key != "duplicate_rate" && key != "journal") {
        throw Error(Errc::kConfig, "unknown plan key", key);
      }
      continue;
    }
    AnnotatorInfo info;
    info.id = key.substr(prefix.size());
    if (value == "lay") {
      info.is_clinician = false;
    } else if (value.rfind("clinician", 0) == 0) {
      info.is_clinician = true;
      auto colon = value.find(':');
      if (colon != std::string::npos) {
        try {
          info.clinician_rank = std::stoi(value.substr(colon + 1));
        } catch (const std::exception&) {
          throw Error(Errc::kConfig, "bad clinician rank", key);
        }
      }
    } else {
      throw Error(Errc::kConfig, "annotator role must be lay or clinician:<rank>", key);
    }
    plan.annotators.push_back(info);
  }
  plan.Validate();
  return plan;
}

AnnotationService::AnnotationService(Dataset posts, PlanConfig plan)
    : posts_(std::move(posts)), plan_(std::move(plan)) {
  plan_.Validate();
  for (std::size_t i = 0; i < posts_.size(); ++i) {
    if (!post_index_.emplace(posts_[i].id, i).second) {
      throw Error(Errc::kInvalidArgument, "duplicate post id", posts_[i].id);
    }
  }
  for (const auto& info : plan_.annotators) {
    AnnotatorState a;
    a.info = info;
    a.order.resize(posts_.size());
    std::iota(a.order.begin(), a.order.end(), 0);
    std::mt19937_64 rng(Mix64(plan_.seed ^ Fnv1a64(info.id)));
    std::shuffle(a.order.begin(), a.order.end(), rng);
    annotators_.emplace(info.id, std::move(a));
  }
  Replay();
}

AnnotationService::AnnotatorState& AnnotationService::StateFor(const std::string& id) {
  auto it = annotators_.find(id);
  if (it == annotators_.end()) {
    throw Error(Errc::kUnknownAnnotator, "unknown annotator", id);
  }
  return it->second;
}

const AnnotationService::AnnotatorState& AnnotationService::StateFor(
    const std::string& id) const {
  auto it = annotators_.find(id);
  if (it == annotators_.end()) {
    throw Error(Errc::kUnknownAnnotator, "unknown annotator", id);
  }
  return it->second;
}

AnnotationService::Slot AnnotationService::MakeSlot(AnnotatorState& a) {
  const std::uint64_t h =
      Mix64(plan_.seed ^ Mix64(Fnv1a64(a.info.id)) ^ Mix64(a.slots + 1));
  if (UnitInterval(h) < plan_.duplicate_rate) {
    std::vector<std::size_t> candidates;
    for (std::size_t post : a.answered_posts) {
      bool pending = std::any_of(a.pending.begin(), a.pending.end(),
                                 [&](const Slot& s) { return s.post == post; });
      if (!pending) candidates.push_back(post);
    }
    if (!candidates.empty()) {
      std::size_t post = candidates[Mix64(h) % candidates.size()];
      return {post, a.max_round[post] + 1};
    }
  }
  if (a.cursor < a.order.size()) return {a.order[a.cursor], 1};
  return {posts_.size(), 0};  // nothing left
}

void AnnotationService::ApplyAssign(AnnotatorState& a, const Slot& slot) {
  ++a.slots;
  if (slot.round == 1) ++a.cursor;
  a.max_round[slot.post] = std::max(a.max_round[slot.post], slot.round);
  a.pending.push_back(slot);
}

void AnnotationService::ApplyAnswer(AnnotatorState& a, const AnnotationRecord& r) {
  const std::size_t post = post_index_.at(r.post_id);
  a.pending.erase(std::remove_if(a.pending.begin(), a.pending.end(),
                                 [&](const Slot& s) {
                                   return s.post == post && s.round == r.round;
                                 }),
                  a.pending.end());
  a.answered[{post, r.round}] = true;
  if (std::find(a.answered_posts.begin(), a.answered_posts.end(), post) ==
      a.answered_posts.end()) {
    a.answered_posts.push_back(post);
  }
  records_.push_back(r);
}

void AnnotationService::Append(const std::string& line) {
  if (plan_.journal.empty()) return;
  std::ofstream out(plan_.journal, std::ios::app);
  if (!out) throw Error(Errc::kIo, "cannot append to " + plan_.journal.string());
  out << line << '\n';
  out.flush();
  if (!out) throw Error(Errc::kIo, "journal write failed");
}

void AnnotationService::Replay() {
  if (plan_.journal.empty() || !std::filesystem::exists(plan_.journal)) return;
  std::ifstream in(plan_.journal);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = plan_.journal.string() + ":" + std::to_string(line_no);
    try {
      Json j = Json::parse(line);
      AnnotatorState& a = StateFor(j.at("annotator_id").get<std::string>());
      auto post = post_index_.find(j.at("post_id").get<std::string>());
      if (post == post_index_.end()) throw Error(Errc::kConfig, where + ": unknown post");
      const std::string event = j.at("event").get<std::string>();
      const int round = j.at("round").get<int>();
      if (event == "assign") {
        ApplyAssign(a, {post->second, round});
      } else if (event == "annotation") {
        AnnotationRecord r;
        r.annotator_id = a.info.id;
        r.post_id = post->first;
        r.labels = LabelSet(j.at("labels").get<std::vector<LabelId>>());
        r.round = round;
        r.is_clinician = j.value("is_clinician", a.info.is_clinician);
        r.clinician_rank = j.value("clinician_rank", a.info.clinician_rank);
        r.timestamp = j.value("timestamp", std::string{});
        ApplyAnswer(a, r);
      } else {
        throw Error(Errc::kConfig, where + ": unknown event " + event);
      }
    } catch (const Json::exception& e) {
      throw Error(Errc::kConfig, where + ": " + e.what());
    }
  }
}

std::vector<BatchItem> AnnotationService::NextBatch(const std::string& annotator_id,
                                                    std::size_t n) {
  std::lock_guard<std::mutex> lock(mu_);
  AnnotatorState& a = StateFor(annotator_id);
  while (a.pending.size() < n) {
    Slot slot = MakeSlot(a);
    if (slot.post == posts_.size()) break;
    Append(Json{{"event", "assign"},
                {"annotator_id", annotator_id},
                {"post_id", posts_[slot.post].id},
                {"round", slot.round},
                {"slot", a.slots},
                {"timestamp", UtcTimestamp()}}
               .dump());
    ApplyAssign(a, slot);
  }
  std::vector<BatchItem> out;
  for (std::size_t i = 0; i < a.pending.size() && i < n; ++i) {
    const Post& p = posts_[a.pending[i].post];
    out.push_back({p.id, p.text, a.pending[i].round});
  }
  return out;
}

AnnotationRecord AnnotationService::Submit(const std::string& annotator_id,
                                           const std::string& post_id, int round,
                                           const LabelSet& labels) {
  std::lock_guard<std::mutex> lock(mu_);
  AnnotatorState& a = StateFor(annotator_id);
  auto post = post_index_.find(post_id);
  if (post == post_index_.end()) {
    throw Error(Errc::kUnassigned, "post was never assigned", post_id);
  }
  if (a.answered.count({post->second, round})) {
    throw Error(Errc::kAlreadyAnswered, "annotation already recorded",
                post_id + "#" + std::to_string(round));
  }
  bool assigned = std::any_of(a.pending.begin(), a.pending.end(), [&](const Slot& s) {
    return s.post == post->second && s.round == round;
  });
  if (!assigned) {
    throw Error(Errc::kUnassigned, "post is not assigned at this round",
                post_id + "#" + std::to_string(round));
  }
  if (labels.empty()) {
    throw Error(Errc::kInvalidLabels, "label set must not be empty", "non-empty");
  }
  labels.Validate();

  AnnotationRecord r;
  r.annotator_id = annotator_id;
  r.post_id = post_id;
  r.labels = labels;
  r.round = round;
  r.is_clinician = a.info.is_clinician;
  r.clinician_rank = a.info.clinician_rank;
  r.timestamp = UtcTimestamp();
  Append(RecordToJson(r).dump());
  ApplyAnswer(a, r);
  return r;
}

Progress AnnotationService::GetProgress(const std::string& annotator_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  const AnnotatorState& a = StateFor(annotator_id);
  Progress p;
  p.annotator_id = annotator_id;
  p.answered = a.answered.size();
  for (const auto& [key, done] : a.answered) p.answered_retest += key.second > 1;
  p.pending = a.pending.size();
  p.unseen = a.order.size() - a.cursor;
  p.total_posts = posts_.size();
  return p;
}

std::vector<AnnotationRecord> AnnotationService::Records() const {
  std::lock_guard<std::mutex> lock(mu_);
  return records_;
}

KappaReport AnnotationService::Agreement() const {
  const auto records = Records();
  return ComputeKappaReport(records, MvcpAggregateAll(records, panel_size()));
}

Dataset AnnotationService::ExportMvcp() const {
  const auto records = Records();
  const auto mvcp = MvcpAggregateAll(records, panel_size());
  Dataset out;
  for (const auto& p : posts_) {
    auto it = mvcp.find(p.id);
    if (it == mvcp.end()) continue;
    Post copy = p;
    copy.labels = it->second;
    copy.provenance = "mvcp";
    out.push_back(std::move(copy));
  }
  return out;
}

struct AnnotationServer::Impl {
  AnnotationService& service;
  Guideline guideline;
  httplib::Server server;

  Impl(AnnotationService& s, Guideline g) : service(s), guideline(std::move(g)) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
    });
    server.Get("/api/batch", Wrap([this](const httplib::Request& req, httplib::Response& res) {
      const std::string annotator = RequiredParam(req, "annotator");
      std::size_t n = 10;
      if (req.has_param("n")) n = ParseCount(req.get_param_value("n"));
      Json items = Json::array();
      for (const auto& item : service.NextBatch(annotator, n)) {
        items.push_back({{"post_id", item.post_id}, {"text", item.text}, {"round", item.round}});
      }
      Send(res, 200, {{"annotator", annotator}, {"items", items}});
    }));
    server.Post("/api/annotations",
                Wrap([this](const httplib::Request& req, httplib::Response& res) {
      Json body;
      try {
        body = Json::parse(req.body);
      } catch (const Json::exception& e) {
        throw Error(Errc::kInvalidArgument, "request body is not JSON", e.what());
      }
      std::string annotator, post;
      std::vector<LabelId> ids;
      int round = 1;
      try {
        annotator = body.at("annotator_id").get<std::string>();
        post = body.at("post_id").get<std::string>();
        ids = body.at("labels").get<std::vector<LabelId>>();
        round = body.value("round", 1);
      } catch (const Json::exception& e) {
        throw Error(Errc::kInvalidArgument, "annotation needs annotator_id, post_id, labels",
                    e.what());
      }
      AnnotationRecord r = service.Submit(annotator, post, round, LabelSet(ids));
      Json out = RecordToJson(r);
      out.erase("event");
      out["status"] = "recorded";
      Send(res, 201, out);
    }));
    server.Get("/api/progress", Wrap([this](const httplib::Request& req, httplib::Response& res) {
      Progress p = service.GetProgress(RequiredParam(req, "annotator"));
      Send(res, 200, {{"annotator", p.annotator_id},
                      {"answered", p.answered},
                      {"answered_retest", p.answered_retest},
                      {"pending", p.pending},
                      {"unseen", p.unseen},
                      {"total_posts", p.total_posts}});
    }));
    server.Get("/api/agreement", Wrap([this](const httplib::Request&, httplib::Response& res) {
      Json rows = Json::array();
      for (const auto& row : service.Agreement().rows) {
        rows.push_back({{"label", row.label},
                        {"name", LabelName(row.label)},
                        {"annotator_pairs", MeanStdJson(row.annotator_pairs)},
                        {"annotator_vs_mvcp", MeanStdJson(row.annotator_vs_mvcp)},
                        {"all", MeanStdJson(row.all)}});
      }
      Send(res, 200, {{"rows", rows}});
    }));
    server.Get("/api/export/mvcp", Wrap([this](const httplib::Request&, httplib::Response& res) {
      Json records = Json::array();
      for (const auto& p : service.ExportMvcp()) {
        Json j = {{"id", p.id}, {"text", p.text}, {"tokens", p.tokens},
                  {"provenance", p.provenance}, {"source", p.source}};
        if (p.labels) j["labels"] = p.labels->ids();
        records.push_back(j);
      }
      Send(res, 200, {{"records", records}});
    }));
    server.Get("/api/guideline", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(guideline.ToJson(), "application/json");
    });
    server.Get("/api/labels", [](const httplib::Request&, httplib::Response& res) {
      Json labels = Json::array();
      for (LabelId l : AllLabels()) {
        const char* kind = IsSymptom(l) ? "symptom"
                           : l == label::kEvidenceOfDepression   ? "ed"
                           : l == label::kNoEvidenceOfDepression ? "noed"
                                                                 : "gibberish";
        labels.push_back({{"id", l},
                          {"name", LabelName(l)},
                          {"kind", kind},
                          {"exclusive", l == label::kNoEvidenceOfDepression ||
                                            l == label::kGibberish}});
      }
      res.set_content(Json{{"labels", labels}}.dump(), "application/json");
    });
  }

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static Handler Wrap(Handler inner) {
    return [inner](const httplib::Request& req, httplib::Response& res) {
      try {
        inner(req, res);
      } catch (const Error& e) {
        SendError(res, e);
      } catch (const std::exception& e) {
        SendError(res, Error(Errc::kInvalidArgument, e.what()));
      }
    };
  }

  static void Send(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void SendError(httplib::Response& res, const Error& e) {
    int status = 500;
    switch (e.code()) {
      case Errc::kUnknownAnnotator: status = 404; break;
      case Errc::kAlreadyAnswered:
      case Errc::kUnassigned:
      case Errc::kConflict: status = 409; break;
      case Errc::kInvalidLabels: status = 422; break;
      case Errc::kInvalidArgument: status = 400; break;
      default: break;
    }
    Send(res, status, {{"code", std::string(ErrcName(e.code()))},
                       {"message", e.what()},
                       {"detail", e.detail()}});
  }

  static std::string RequiredParam(const httplib::Request& req, const char* name) {
    if (!req.has_param(name) || req.get_param_value(name).empty()) {
      throw Error(Errc::kInvalidArgument, std::string("missing query parameter ") + name);
    }
    return req.get_param_value(name);
  }

  static std::size_t ParseCount(const std::string& s) {
    try {
      std::size_t used = 0;
      long v = std::stol(s, &used);
      if (used == s.size() && v >= 0 && v <= 1000) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw Error(Errc::kInvalidArgument, "n must be an integer in [0, 1000]", s);
  }
};

AnnotationServer::AnnotationServer(AnnotationService& service, Guideline guideline)
    : impl_(std::make_unique<Impl>(service, std::move(guideline))) {}

AnnotationServer::~AnnotationServer() { Stop(); }

int AnnotationServer::BindToAnyPort(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

bool AnnotationServer::ListenAfterBind() { return impl_->server.listen_after_bind(); }

bool AnnotationServer::Listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

void AnnotationServer::WaitUntilReady() const { impl_->server.wait_until_ready(); }

void AnnotationServer::Stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace dsd
