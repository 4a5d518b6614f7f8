#include "cli/commands.hpp"

int main(int argc, char** argv) { return fpg::cli::run(argc, argv); }
