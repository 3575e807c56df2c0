#include "gridmesh/cli_app.hpp"

int main(int argc, char** argv) { return gridmesh::run_cli(argc, argv); }
