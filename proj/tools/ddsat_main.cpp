#include "ddsat/cli.hpp"

int main(int argc, char** argv) { return ddsat::run_cli(argc, argv); }
