#ifndef RELCI_ERRORS_H_
#define RELCI_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace relci {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidRank,
  kUnlabeledQuery,
  kInvalidDataset,
  kEmptyQuerySet,
  kInsufficientData,
  kAlignment,
  kInvalidAlpha,
  kInvalidLambda,
  kInvalidLambdas,
  kNoCalibrationData,
  kTooFewBatches,
  kCalibrationInfeasible,
  kParse,
  kDuplicateEntry,
  kScale,
  kDistribution,
  kIo,
  kUsage,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception type. The code
// lets callers (notably the CLI) map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace relci

#endif  // RELCI_ERRORS_H_
