#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "loongx/numerics/io.h"

namespace loongx::evalcli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitData = 3 };

/// Every key a --config file may set.
std::set<std::string> known_config_keys();

/// Throws InvalidConfig naming the first key outside known_config_keys().
void check_config_keys(const KeyValues& kv);

/// Entry point of the `loongx` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace loongx::evalcli
