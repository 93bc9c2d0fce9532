#include "adlab/experiments.hpp"

int main(int argc, char** argv) { return adlab::cli_dispatch(argc, argv); }
