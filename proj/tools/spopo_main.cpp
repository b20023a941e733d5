#include "spopo/cli.hpp"

int main(int argc, char** argv) { return spopo::run_cli(argc, argv); }
