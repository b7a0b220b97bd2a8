#include "rnls/app.hpp"

int main(int argc, char** argv) { return rnls::app::main(argc, argv); }
