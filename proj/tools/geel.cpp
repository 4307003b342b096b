#include "geel/cli.hpp"

int main(int argc, char** argv) { return geel::cli::main(argc, argv); }
