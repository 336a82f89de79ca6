#include "netkde/cli.hpp"

int main(int argc, char** argv) { return netkde::cli_main(argc, argv); }
