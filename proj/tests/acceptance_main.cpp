// Acceptance suite: one pass/fail line per criterion. Populated incrementally.
#include <iostream>

int main() {
  std::cout << "acceptance: placeholder\n";
  return 1;
}
