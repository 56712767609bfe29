#include "relci/bootstrap_ci.h"

#include <algorithm>
#include <vector>

#include <fmt/format.h>

#include "relci/errors.h"
#include "relci/parallel.h"
#include "relci/random.h"
#include "relci/stats.h"

namespace relci {
namespace {

constexpr int kBlockSize = 256;

}  // namespace

EmpiricalEstimate ComputeEmpiricalEstimate(std::span<const double> values) {
  if (values.size() < 2) {
    throw Error(ErrorCode::kInsufficientData,
                fmt::format("empirical estimate needs n >= 2, got {}",
                            values.size()));
  }
  return {stats::Mean(values), stats::SampleVariance(values),
          static_cast<int>(values.size())};
}

CiReport BootstrapCi(std::span<const double> values,
                     const BootstrapOptions& options) {
  if (values.size() < 2) {
    throw Error(ErrorCode::kInsufficientData,
                fmt::format("bootstrap needs n >= 2, got {}", values.size()));
  }
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidAlpha,
                fmt::format("alpha must be in (0, 1), got {}", options.alpha));
  }
  if (options.resamples < 100) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("bootstrap needs >= 100 resamples, got {}",
                            options.resamples));
  }

  const EmpiricalEstimate empirical = ComputeEmpiricalEstimate(values);
  const std::size_t n = values.size();
  std::vector<double> means(options.resamples);
  const int blocks = (options.resamples + kBlockSize - 1) / kBlockSize;
  ParallelFor(blocks, options.threads, [&](int block) {
    Rng rng(DeriveSeed(options.seed, static_cast<std::uint64_t>(block)));
    const int begin = block * kBlockSize;
    const int end = std::min(options.resamples, begin + kBlockSize);
    for (int b = begin; b < end; ++b) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += values[rng.Index(n)];
      means[b] = sum / static_cast<double>(n);
    }
  });
  std::sort(means.begin(), means.end());

  CiReport report;
  report.method = "bootstrap";
  report.alpha = options.alpha;
  report.estimate = empirical.mean;
  report.lower = stats::SortedQuantile(means, options.alpha / 2.0);
  report.upper = stats::SortedQuantile(means, 1.0 - options.alpha / 2.0);
  // Rounding in the resampled sums can leave a constant sample's bounds one
  // ulp off; the bounds never leave the sample range.
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  report.lower = std::clamp(report.lower, *lo, *hi);
  report.upper = std::clamp(report.upper, *lo, *hi);
  report.diagnostics["n"] = static_cast<double>(n);
  report.diagnostics["resamples"] = static_cast<double>(options.resamples);
  report.diagnostics["empirical_variance"] = empirical.variance;
  return report;
}

}  // namespace relci
