#include "railtt/cli.hpp"

int main(int argc, char** argv) {
  return railtt::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
