#ifndef CRLORA_CLI_HPP
#define CRLORA_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace crlora {

enum ExitCode { exit_ok = 0, exit_failure = 1, exit_config = 2, exit_collision = 3 };

/// Entry point of the command-line tool; @p args excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crlora

#endif  // CRLORA_CLI_HPP
