#include "cli.hpp"

int main(int argc, char** argv) { return boltzmann::cli::run_cli(argc, argv); }
