#include "vgcl/cli.hpp"

int main(int argc, char** argv) { return vgcl::run_cli(argc, argv); }
