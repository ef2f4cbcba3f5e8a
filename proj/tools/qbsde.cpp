#include <cstdio>
int main() { std::puts("qbsde: no subcommand"); return 2; }
