#include "vad/cli.hpp"

int main(int argc, char** argv) { return vad::run_cli(argc, argv); }
