#include "antijam/cli.hpp"

int main(int argc, char** argv) { return antijam::cli::run(argc, argv); }
