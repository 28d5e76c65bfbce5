#include "hvo/cli.hpp"

int main(int argc, char** argv) { return hvo::run_cli(argc, argv); }
