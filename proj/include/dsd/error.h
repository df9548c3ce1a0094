#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dsd {

enum class Errc {
  kInvalidArgument,
  kNoAnnotations,
  kNoRetestData,
  kLengthMismatch,
  kInvalidLabels,
  kIncompleteCorpus,
  kUnembeddable,
  kDimensionMismatch,
  kRetryable,
  kProtocol,
  kConfig,
  kEmptyDataset,
  kConflict,
  kUnknownAnnotator,
  kAlreadyAnswered,
  kUnassigned,
  kIo,
  kLeakage,
};

// Stable kebab-case name used in JSON error bodies and CLI messages.
std::string_view ErrcName(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  Errc code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

// Raised by the remote embedding client once its retry budget is spent.
class RetryableError : public Error {
 public:
  RetryableError(const std::string& message, int attempts)
      : Error(Errc::kRetryable, message,
              "attempts=" + std::to_string(attempts)),
        attempts_(attempts) {}

  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

}  // namespace dsd
