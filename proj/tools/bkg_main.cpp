#include "bkg/cli.hpp"

int main(int argc, char** argv) { return bkg::cli::main_entry(argc, argv); }
