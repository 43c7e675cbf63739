// Writes a noisy sinusoid-mixture CSV for smoke tests and the synthetic benchmark.
#include <iostream>

#include "CLI11.hpp"
#include "neutsflow/data/synthetic.hpp"
#include "neutsflow/error.hpp"

int main(int argc, char** argv) {
    using namespace neutsflow;
    CLI::App app{"Generate a synthetic sinusoid-mixture CSV", "neutsflow-synth"};
    data::SyntheticSpec spec;
    std::string out = "synthetic.csv";
    app.add_option("--out", out, "output CSV path");
    app.add_option("--length", spec.length, "rows");
    app.add_option("--channels", spec.channels, "channels");
    app.add_option("--noise", spec.noise_sigma, "Gaussian noise standard deviation");
    app.add_option("--seed", spec.seed, "random seed");
    app.add_option("--interval", spec.interval, "seconds between rows");
    CLI11_PARSE(app, argc, argv);
    try {
        data::save_csv(data::make_sinusoid_table(spec), out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    std::cout << "wrote " << spec.length << " rows to " << out << "\n";
    return 0;
}
