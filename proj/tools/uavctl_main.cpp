#include <cstdio>

int main() {
  std::puts("uavctl: CLI under construction");
  return 1;
}
