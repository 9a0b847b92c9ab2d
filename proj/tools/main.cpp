#include "degkit/cli.hpp"

int main(int argc, char** argv) { return degkit::run(argc, argv); }
