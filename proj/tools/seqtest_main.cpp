#include "seqtest/cli.hpp"

int main(int argc, char** argv) { return seqtest::cli::run(argc, argv); }
