#include "lpds/cli.hpp"

int main(int argc, char** argv) { return lpds::cli::run(argc, argv); }
