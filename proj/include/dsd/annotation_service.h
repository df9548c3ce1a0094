#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "dsd/annotation.h"
#include "dsd/guideline.h"
#include "dsd/store.h"

namespace dsd {

class Config;

struct AnnotatorInfo {
  std::string id;
  bool is_clinician = false;
  int clinician_rank = 0;
};

// Plan file keys:
//   seed = 7
//   duplicate_rate = 0.05        # in [0, 1)
//   journal = journal.jsonl      # relative to the plan file; optional
//   annotator.<id> = lay | clinician:<rank>
struct PlanConfig {
  std::uint64_t seed = 1;
  double duplicate_rate = 0.05;
  std::filesystem::path journal;  // empty keeps everything in memory
  std::vector<AnnotatorInfo> annotators;

  void Validate() const;
  static PlanConfig FromConfig(const Config& config,
                               const std::filesystem::path& base_dir = {});
};

struct BatchItem {
  std::string post_id;
  std::string text;
  int round = 1;
};

struct Progress {
  std::string annotator_id;
  std::size_t answered = 0;
  std::size_t answered_retest = 0;  // answers with round > 1
  std::size_t pending = 0;
  std::size_t unseen = 0;  // posts never assigned to this annotator
  std::size_t total_posts = 0;
};

// Assignment, intake and reporting for a fixed set of posts and annotators.
//
// Each annotator walks the posts in an order seeded by (seed, annotator).
// Every new queue slot is a retest duplicate when a hash of
// (seed, annotator, slot index) falls below duplicate_rate and some answered
// post is not already pending; the duplicate re-enters with the next round.
// Every assignment and answer is appended to the journal, which is replayed
// on construction. All public methods are thread-safe.
class AnnotationService {
 public:
  AnnotationService(Dataset posts, PlanConfig plan);

  // Pending items first, topped up with new slots to at most n. Repeated
  // calls return the same items until answers arrive.
  std::vector<BatchItem> NextBatch(const std::string& annotator_id, std::size_t n);

  // Persists exactly once. Clinician fields come from the plan, not the
  // caller. Errors: kUnknownAnnotator, kUnassigned, kAlreadyAnswered,
  // kInvalidLabels (detail names the violated rule).
  AnnotationRecord Submit(const std::string& annotator_id, const std::string& post_id,
                          int round, const LabelSet& labels);

  Progress GetProgress(const std::string& annotator_id) const;
  KappaReport Agreement() const;
  // MVCP over round-1 answers. Posts with round-1 answers but no consensus
  // are included without labels; posts nobody answered are left out.
  Dataset ExportMvcp() const;

  std::vector<AnnotationRecord> Records() const;
  int panel_size() const { return static_cast<int>(plan_.annotators.size()); }
  const PlanConfig& plan() const { return plan_; }

 private:
  struct Slot {
    std::size_t post;  // index into posts_
    int round;
  };
  struct AnnotatorState {
    AnnotatorInfo info;
    std::vector<std::size_t> order;  // seeded permutation of post indices
    std::size_t cursor = 0;          // next unseen position in order
    std::uint64_t slots = 0;         // slots created so far
    std::vector<Slot> pending;
    std::vector<std::size_t> answered_posts;  // first-answer order, distinct
    std::map<std::size_t, int> max_round;     // per post, highest assigned round
    std::map<std::pair<std::size_t, int>, bool> answered;  // (post, round)
  };

  AnnotatorState& StateFor(const std::string& annotator_id);
  const AnnotatorState& StateFor(const std::string& annotator_id) const;
  Slot MakeSlot(AnnotatorState& a);
  void ApplyAssign(AnnotatorState& a, const Slot& slot);
  void ApplyAnswer(AnnotatorState& a, const AnnotationRecord& record);
  void Append(const std::string& line);
  void Replay();

  Dataset posts_;
  std::map<std::string, std::size_t> post_index_;
  PlanConfig plan_;
  std::map<std::string, AnnotatorState> annotators_;
  std::vector<AnnotationRecord> records_;
  mutable std::mutex mu_;
};

// HTTP+JSON front end:
//   GET  /api/batch?annotator=ID&n=N     POST /api/annotations
//   GET  /api/progress?annotator=ID      GET  /api/agreement
//   GET  /api/export/mvcp                GET  /api/guideline
//   GET  /api/labels
// Errors are {code, message, detail} with 400, 404, 409 or 422.
class AnnotationServer {
 public:
  AnnotationServer(AnnotationService& service, Guideline guideline);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Binds an ephemeral port and returns it; follow with ListenAfterBind.
  int BindToAnyPort(const std::string& host = "127.0.0.1");
  bool ListenAfterBind();
  // Blocking bind + listen.
  bool Listen(const std::string& host, int port);
  void WaitUntilReady() const;
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dsd
