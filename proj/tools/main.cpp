#include "qrw/harness.hpp"

int main(int argc, char** argv) { return qrw::cli_main(argc, argv); }
