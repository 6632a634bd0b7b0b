#include "nlslab/lab.hpp"

int main(int argc, char** argv) { return nlslab::cli(argc, argv); }
