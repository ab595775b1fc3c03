#include "gradtopo/cli.hpp"

int main(int argc, char** argv) { return gradtopo::run_cli(argc, argv); }
