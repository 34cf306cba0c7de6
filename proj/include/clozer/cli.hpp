#ifndef CLOZER_CLI_HPP_
#define CLOZER_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace clozer::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Entry point shared by the `clozer` binary and the tests. `args` excludes
// the program name. Subcommands: generate, rank, grade, serve, analyze.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clozer::cli

#endif  // CLOZER_CLI_HPP_
