#ifndef RELCI_BOOTSTRAP_CI_H_
#define RELCI_BOOTSTRAP_CI_H_

#include <cstdint>
#include <span>

#include "relci/ci_report.h"

namespace relci {

struct EmpiricalEstimate {
  double mean = 0.0;
  double variance = 0.0;  // sample variance, denominator n - 1
  int n = 0;
};

// Classical mean and variance of per-query utilities on the labeled sample.
// Throws kInsufficientData for fewer than two values.
EmpiricalEstimate ComputeEmpiricalEstimate(std::span<const double> values);

struct BootstrapOptions {
  double alpha = 0.05;
  int resamples = 10'000;
  std::uint64_t seed = 0;
  // Worker threads for the resampling loop. The result does not depend on
  // this value.
  int threads = 1;
};

// Percentile bootstrap of the mean.
//
// Resamples are generated in fixed blocks of 256; block b draws from an Rng
// seeded with DeriveSeed(seed, b). Bounds are the alpha/2 and 1 - alpha/2
// quantiles of the resampled means with linear interpolation between order
// statistics. The point estimate is the plain sample mean.
CiReport BootstrapCi(std::span<const double> values,
                     const BootstrapOptions& options);

}  // namespace relci

#endif  // RELCI_BOOTSTRAP_CI_H_
