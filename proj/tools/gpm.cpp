#include "gpm/cli.hpp"

int main(int argc, char** argv) { return gpm::cli::run(argc, argv); }
