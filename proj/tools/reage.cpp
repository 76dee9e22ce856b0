#include "reage/cli/app.hpp"

int main(int argc, char** argv) { return reage::cli::run(argc, argv); }
