#include "alignkit/cli.hpp"

int main(int argc, char** argv) { return alignkit::cli::run(argc, argv); }
