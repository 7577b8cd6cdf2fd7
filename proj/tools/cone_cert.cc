#include "cli.h"

int main(int argc, char** argv) { return conecert::cli::run(argc, argv); }
