#include "commands.hpp"

int main(int argc, char** argv) { return dualcap::cli::run(argc, argv); }
