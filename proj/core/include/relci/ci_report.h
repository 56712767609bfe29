#ifndef RELCI_CI_REPORT_H_
#define RELCI_CI_REPORT_H_

#include <map>
#include <string>

namespace relci {

struct CiReport {
  std::string method;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.05;
  // Method-specific numbers: variances, lambdas, calibration losses.
  std::map<std::string, double> diagnostics;

  double Width() const { return upper - lower; }
  bool Contains(double value) const {
    return lower <= value && value <= upper;
  }
};

}  // namespace relci

#endif  // RELCI_CI_REPORT_H_
