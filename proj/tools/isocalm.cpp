#include "isocalm/cli.hpp"

int main(int argc, char** argv) { return isocalm::run(std::vector<std::string>(argv + 1, argv + argc)); }
