#include "aqe/cli.hpp"

int main(int argc, char** argv) { return aqe::cli_main(argc, argv); }
