#include <cstdio>

int main() {
    std::puts("detcloud: subcommands land with the harness");
    return 0;
}
