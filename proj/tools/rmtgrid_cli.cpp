#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rmtgrid/cli/commands.hpp"

namespace cli = rmtgrid::cli;

int main(int argc, char** argv) {
    CLI::App app{"Random-matrix analysis of sensor streams"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "rmtgrid 0.1.0");

    std::uint64_t seed = 0;
    bool seed_given = false;
    auto add_seed = [&](CLI::App* sub) {
        sub->add_option_function<std::uint64_t>(
               "--seed",
               [&](const std::uint64_t& v) {
                   seed = v;
                   seed_given = true;
               },
               "RNG seed (default: $RMTGRID_SEED, else 0)");
    };

    cli::SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate a scripted grid stream to CSV");
    simulate->add_option("--preset", sim.preset, "Event script: ieee118, fusion or noise")->capture_default_str();
    simulate->add_option("--output", sim.output, "Output CSV path")->required();
    add_seed(simulate);

    cli::LawcheckOptions law;
    auto* lawcheck = app.add_subcommand("lawcheck", "Sliding-window ring-law and M-P checks");
    lawcheck->add_option("--input", law.input, "Stream CSV")->required()->check(CLI::ExistingFile);
    lawcheck->add_option("--output", law.output, "JSON report path")->required();
    lawcheck->add_option("--window", law.window, "Window length T")->capture_default_str();
    lawcheck->add_option("--stride", law.stride, "Window stride")->capture_default_str();
    lawcheck->add_option("--indicator", law.indicators,
                         "Extra LES indicator: moment-k, log-det, likelihood-ratio or count (repeatable)");
    add_seed(lawcheck);

    cli::UstatOptions ust;
    auto* ustat = app.add_subcommand("ustat", "Pooled U-statistic covariance-change test");
    ustat->add_option("--input", ust.input, "Stream CSV")->required()->check(CLI::ExistingFile);
    ustat->add_option("--output", ust.output, "JSON report path");
    ustat->add_option("--q", ust.q, "Number of windows")->capture_default_str();
    ustat->add_option("--ng", ust.n_g, "Samples per window")->capture_default_str();
    ustat->add_option("--alpha", ust.alpha, "Nominal false-alarm probability")->capture_default_str();
    add_seed(ustat);

    cli::FreeprobOptions fp;
    auto* freeprob = app.add_subcommand("freeprob", "Polynomial spectrum by linearization vs Monte Carlo");
    freeprob->add_option("--preset,--polynomial", fp.polynomial, "anticommutator or anticommutator-plus-square")
        ->capture_default_str();
    freeprob->add_option("--laws", fp.laws, "Input laws: semicircle or free-poisson")->capture_default_str();
    freeprob->add_option("--grid-points", fp.grid_points, "Density grid size")->capture_default_str();
    freeprob->add_option("--epsilon", fp.epsilon, "Distance above the real axis")->capture_default_str();
    freeprob->add_option("--n", fp.n, "Monte-Carlo matrix size")->capture_default_str();
    freeprob->add_option("--repetitions", fp.repetitions, "Monte-Carlo repetitions")->capture_default_str();
    freeprob->add_option("--output", fp.output, "Output CSV path");
    add_seed(freeprob);

    cli::SpectrumOptions sp;
    auto* spectrum = app.add_subcommand("spectrum", "ESD with semicircle or M-P overlay");
    spectrum->add_option("--input", sp.input, "Stream CSV (M-P overlay)")->check(CLI::ExistingFile);
    spectrum->add_option("--preset,--ensemble", sp.ensemble, "gue or lue when no input is given")->capture_default_str();
    spectrum->add_option("--n", sp.n, "GUE size or LUE row count")->capture_default_str();
    spectrum->add_option("--t", sp.t, "LUE sample count (0: 2n)")->capture_default_str();
    spectrum->add_option("--output", sp.output, "Output CSV path");
    add_seed(spectrum);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kError;
    }

    try {
        if (!seed_given) seed = cli::default_seed();
        if (simulate->parsed()) {
            sim.seed = seed;
            return cli::cmd_simulate(sim, std::cout);
        }
        if (lawcheck->parsed()) {
            law.seed = seed;
            return cli::cmd_lawcheck(law, std::cout);
        }
        if (ustat->parsed()) return cli::cmd_ustat(ust, std::cout);
        if (freeprob->parsed()) {
            fp.seed = seed;
            return cli::cmd_freeprob(fp, std::cout);
        }
        if (spectrum->parsed()) {
            sp.seed = seed;
            return cli::cmd_spectrum(sp, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kError;
    }
    return cli::kError;
}
