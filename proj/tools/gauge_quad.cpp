#include "gauge_quad/cli.hpp"

int main(int argc, char** argv) { return gauge_quad::run_command(argc, argv); }
