#include "pnd_cli.hpp"

int main(int argc, char** argv) { return pnd::cli::run(argc, argv); }
