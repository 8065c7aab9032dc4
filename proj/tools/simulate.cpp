#include "misprior/cli.hpp"

int main(int argc, char** argv) { return misprior::cli::run_cli(argc, argv); }
