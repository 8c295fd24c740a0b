#include "navkit/cli.hpp"

int main(int argc, char** argv) { return navkit::run_cli(argc, argv); }
