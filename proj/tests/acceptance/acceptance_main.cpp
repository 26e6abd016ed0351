#include <fstream>
#include <iostream>

#include "nonosgood/acceptance.hpp"

// Dedicated acceptance binary: runs every criterion at its configured
// tolerance and prints one pass/fail line per criterion.
int main(int argc, char** argv) {
    nonosgood::io::RunConfig cfg;
    if (argc > 1) cfg = nonosgood::io::load_config(argv[1]);
    try {
        auto reports = nonosgood::accept::run_all(cfg, nullptr);
        return nonosgood::accept::summarize(reports, std::cout);
    } catch (const std::exception& e) {
        std::cout << "[FAIL] suite aborted: " << e.what() << "\n";
        return 2;
    }
}
