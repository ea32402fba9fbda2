#include "eiv/harness.hpp"

int main(int argc, char** argv) { return eiv::run_cli(argc, argv); }
