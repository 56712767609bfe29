#include "relci/errors.h"

namespace relci {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidRank: return "invalid-rank";
    case ErrorCode::kUnlabeledQuery: return "unlabeled-query";
    case ErrorCode::kInvalidDataset: return "invalid-dataset";
    case ErrorCode::kEmptyQuerySet: return "empty-query-set";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kAlignment: return "alignment";
    case ErrorCode::kInvalidAlpha: return "invalid-alpha";
    case ErrorCode::kInvalidLambda: return "invalid-lambda";
    case ErrorCode::kInvalidLambdas: return "invalid-lambdas";
    case ErrorCode::kNoCalibrationData: return "no-calibration-data";
    case ErrorCode::kTooFewBatches: return "too-few-batches";
    case ErrorCode::kCalibrationInfeasible: return "calibration-infeasible";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kDuplicateEntry: return "duplicate-entry";
    case ErrorCode::kScale: return "scale";
    case ErrorCode::kDistribution: return "distribution";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kUsage: return "usage";
  }
  return "unknown";
}

}  // namespace relci
