#include <nrcs/ordinal.hpp>

#include <iostream>

int main() {
  std::cout << nrcs::render_ordinal(nrcs::omega_tower(2)) << "\n";
  return 0;
}
