#include "cli/app.hpp"

int main(int argc, char** argv) { return sloppykit::cli::run(argc, argv); }
