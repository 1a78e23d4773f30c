#include <CLI11.hpp>

#include "semcom/cli.hpp"

int main(int argc, char** argv) { return semcom::cli::run(argc, argv); }
