#include "smartpower/cli.hpp"

int main(int argc, char** argv) { return smartpower::run_cli(argc, argv); }
