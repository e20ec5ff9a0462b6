#include "scho/cli.hpp"

int main(int argc, char** argv) { return scho::run_cli(argc, argv); }
