#include "bridgekit/cli.hpp"

int main(int argc, char** argv) { return bridgekit::cli_main(argc, argv); }
