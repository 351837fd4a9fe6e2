// Misbehaving external SUT for harness tests.
// Usage: fake_sut <mode> <dataset.csv>
//   ref        correct coefficients
//   crash      abort()
//   exit3      exit status 3
//   nan        prints NaN coefficients
//   text       prints a non-numeric token
//   wrong-size one coefficient too many
//   empty      prints nothing
//   hang       sleeps forever

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "mtlr/io.hpp"
#include "mtlr/solver.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: fake_sut <mode> <dataset.csv>\n";
    return 2;
  }
  const std::string mode = argv[1];
  if (mode == "crash") std::abort();
  if (mode == "exit3") return 3;
  if (mode == "empty") return 0;
  if (mode == "hang")
    for (;;) std::this_thread::sleep_for(std::chrono::seconds(1));

  const auto ds = mtlr::read_dataset(argv[2]);
  auto coefs = mtlr::solve_coefficients(ds);
  if (mode == "nan") coefs.back() = std::nan("");
  if (mode == "wrong-size") coefs.push_back(0.0);
  for (std::size_t i = 0; i < coefs.size(); ++i) std::cout << (i ? " " : "") << mtlr::format_double(coefs[i]);
  if (mode == "text") std::cout << " oops";
  std::cout << '\n';
  return 0;
}
