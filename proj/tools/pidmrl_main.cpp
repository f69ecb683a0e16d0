#include "cli/commands.hpp"

int main(int argc, char** argv) {
  return pidmrl::cli::run_cli(argc, argv);
}
