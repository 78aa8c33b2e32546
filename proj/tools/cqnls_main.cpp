#include "cqnls/cli.hpp"

int main(int argc, char** argv) { return cqnls::run_cli(argc, argv); }
