#include "qgraph/cli.hpp"

int main(int argc, char** argv) { return qgraph::run_cli(argc, argv); }
