#include "tempo/cli/commands.hpp"

int main(int argc, char** argv) { return tempo::cli::run(argc, argv); }
