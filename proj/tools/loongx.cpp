#include <iostream>
#include <string>
#include <vector>

#include "loongx/evalcli/cli.h"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return loongx::evalcli::run_cli(args, std::cout, std::cerr);
}
