#include <iostream>
#include <string>
#include <vector>

#include "cbfmarl_cli/cli.hpp"

int main(int argc, char** argv) {
  return cbfmarl::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
