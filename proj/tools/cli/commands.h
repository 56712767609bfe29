#ifndef RELCI_TOOLS_CLI_COMMANDS_H_
#define RELCI_TOOLS_CLI_COMMANDS_H_

#include <ostream>
#include <string>
#include <vector>

#include "relci/errors.h"

namespace relci::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;         // I/O and format problems
inline constexpr int kExitCalibration = 3;  // calibration infeasible

int ExitCodeFor(ErrorCode code);

// Runs the `relci` command line. args[0] is the program name. Everything the
// command prints goes to `out`; diagnostics go to `err`.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace relci::cli

#endif  // RELCI_TOOLS_CLI_COMMANDS_H_
