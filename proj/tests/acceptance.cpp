#include "msmpc/harness.hpp"
int main() { return 0; }
