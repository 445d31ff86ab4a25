#include "pfreg/cli.hpp"

int main(int argc, char** argv) { return pfreg::cli::main(argc, argv); }
