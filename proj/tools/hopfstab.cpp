#include "hopfstab/cli.hpp"

int main(int argc, char** argv) { return hopfstab::cli::run(argc, argv); }
