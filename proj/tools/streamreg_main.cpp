#include "streamreg/cli.hpp"

int main(int argc, char** argv) { return streamreg::cli::main_entry(argc, argv); }
