#include "metacde/cli.hpp"

int main(int argc, char** argv) { return metacde::run_cli(argc, argv); }
