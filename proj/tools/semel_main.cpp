#include "semel/cli.hpp"

int main(int argc, char** argv) { return semel::run_cli(argc, argv); }
