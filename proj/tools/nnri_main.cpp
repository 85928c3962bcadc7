#include "nnri/commands.hpp"

int main(int argc, char** argv) { return nnri::cli_main(argc, argv); }
