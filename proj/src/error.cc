#include "dsd/error.h"

namespace dsd {

std::string_view ErrcName(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "invalid-argument";
    case Errc::kNoAnnotations: return "no-annotations";
    case Errc::kNoRetestData: return "no-retest-data";
    case Errc::kLengthMismatch: return "length-mismatch";
    case Errc::kInvalidLabels: return "invalid-labels";
    case Errc::kIncompleteCorpus: return "incomplete-corpus";
    case Errc::kUnembeddable: return "unembeddable";
    case Errc::kDimensionMismatch: return "dimension-mismatch";
    case Errc::kRetryable: return "retryable";
    case Errc::kProtocol: return "protocol";
    case Errc::kConfig: return "config";
    case Errc::kEmptyDataset: return "empty-dataset";
    case Errc::kConflict: return "conflict";
    case Errc::kUnknownAnnotator: return "unknown-annotator";
    case Errc::kAlreadyAnswered: return "already-answered";
    case Errc::kUnassigned: return "unassigned";
    case Errc::kIo: return "io";
    case Errc::kLeakage: return "leakage";
  }
  return "unknown";
}

}  // namespace dsd
