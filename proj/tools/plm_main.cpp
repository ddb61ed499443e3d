#include "plm/cli.hpp"

int main(int argc, char** argv) { return plm::cli_main(argc, argv); }
