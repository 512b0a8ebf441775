#include "commands.hpp"

int main(int argc, char** argv) { return clotkit::cli::run(argc, argv); }
