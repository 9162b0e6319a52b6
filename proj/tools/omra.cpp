#include "omra/cli.hpp"

int main(int argc, char** argv) { return omra::cli::run(argc, argv); }
