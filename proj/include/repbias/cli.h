#ifndef REPBIAS_CLI_H_
#define REPBIAS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace repbias {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNumeric = 1;  // solver or other internal failure
inline constexpr int kExitUsage = 2;    // bad flags or unusable data

// Runs one command line (args excludes the program name). Human-readable
// output goes to `out`, diagnostics to `err`. Never throws.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace repbias

#endif  // REPBIAS_CLI_H_
