#include "cli.hpp"

int main(int argc, char** argv) { return sphenc::cli_main(argc, argv); }
