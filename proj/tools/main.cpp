#include <iostream>

#include "run_config.hpp"

int main(int argc, char** argv) {
    pulse_dicke::cli::RunConfig cfg;
    try {
        cfg = pulse_dicke::cli::parse_config(argc, argv);
    } catch (const pulse_dicke::Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return pulse_dicke::cli::run(cfg, std::cout, std::cerr);
}
