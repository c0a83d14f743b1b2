#include "cian/cli.hpp"

int main(int argc, char** argv) { return cian::run_cli(argc, argv); }
