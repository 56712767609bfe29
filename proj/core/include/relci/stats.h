#ifndef RELCI_STATS_H_
#define RELCI_STATS_H_

#include <span>

namespace relci::stats {

double Mean(std::span<const double> values);

// Unbiased sample variance (denominator n - 1). Requires n >= 2.
double SampleVariance(std::span<const double> values);

// Inverse of the standard normal CDF. Acklam's rational approximation
// followed by one Halley refinement step against std::erfc; absolute error
// is below 1e-12 on (1e-300, 1 - 1e-16).
double NormalQuantile(double p);

double NormalCdf(double x);

// Quantile of an ascending-sorted sample using linear interpolation between
// order statistics (position h = (n - 1) * q, "type 7").
double SortedQuantile(std::span<const double> sorted, double q);

}  // namespace relci::stats

#endif  // RELCI_STATS_H_
