#include "relpv/cli.hpp"

int main(int argc, char** argv) { return relpv::cli::run_cli(argc, argv); }
