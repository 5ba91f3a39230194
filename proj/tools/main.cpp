#include "mfe/cli/run.hpp"

int main(int argc, char** argv) { return mfe::cli::run(argc, argv); }
