#include "rough/cli/cli.hpp"

int main(int argc, char** argv) { return rough::cli::main_entry(argc, argv); }
