#include "cli_app.hpp"

int main(int argc, char** argv) { return filterbreak::cli::run_cli(argc, argv); }
