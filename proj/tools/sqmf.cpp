#include "sqmf/cli.hpp"

int main(int argc, char** argv) { return sqmf::run_cli(argc, argv); }
