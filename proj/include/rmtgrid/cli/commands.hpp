#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmtgrid/covariance_tests.hpp"
#include "rmtgrid/ensembles.hpp"
#include "rmtgrid/free_probability.hpp"
#include "rmtgrid/grid_sim.hpp"
#include "rmtgrid/io/reports.hpp"
#include "rmtgrid/io/stream_io.hpp"
#include "rmtgrid/sa_pipeline.hpp"
#include "rmtgrid/spectral_laws.hpp"

namespace rmtgrid::cli {

/// Process exit codes: stable contract for scripting.
enum ExitCode : int { kClean = 0, kError = 1, kAnomaly = 2 };

inline constexpr const char* kSeedVariable = "RMTGRID_SEED";

/// Seed from the RMTGRID_SEED environment variable, else 0.
inline std::uint64_t default_seed() {
    const char* env = std::getenv(kSeedVariable);
    if (env == nullptr || *env == '\0') return 0;
    const std::string_view s(env);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InputError(std::string(kSeedVariable) + " must be an unsigned integer, got '" + env + "'");
    return v;
}

/// `report.json` -> `report.<suffix>`.
inline std::filesystem::path sibling(const std::filesystem::path& p, const std::string& suffix) {
    std::filesystem::path out = p;
    out.replace_extension(suffix);
    return out;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOptions {
    std::string preset = "ieee118";
    std::uint64_t seed = 0;
    std::filesystem::path output;
};

inline io::StreamData simulated_stream_data(const std::string& preset, std::uint64_t seed) {
    const EventScript script = script_preset(preset);
    const SimulatedStream sim = simulate_stream(script, seed);
    io::StreamData data;
    for (std::size_t i = 0; i < script.node_count; ++i) data.sensors.push_back("bus" + std::to_string(i + 1));
    data.times = sim.times;
    data.values = sim.values;
    data.meta.sampling_hz = script.sampling_hz;
    data.meta.units = "p.u.";
    data.meta.source = "simulate preset=" + preset + " seed=" + std::to_string(seed);
    return data;
}

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& log) {
    if (opt.output.empty()) throw InputError("simulate: --output is required");
    const io::StreamData data = simulated_stream_data(opt.preset, opt.seed);
    io::write_stream(opt.output, data);
    log << "wrote " << data.sample_count() << " samples x " << data.sensor_count() << " sensors to "
        << opt.output.string() << "\n";
    return kClean;
}

// ---------------------------------------------------------------------------
// lawcheck
// ---------------------------------------------------------------------------

struct LawcheckOptions {
    std::filesystem::path input;
    std::filesystem::path output;  // JSON report; indicator and ESD CSVs are written beside it
    std::size_t window = 240;
    std::size_t stride = 1;
    std::uint64_t seed = 0;
    std::vector<std::string> indicators;
};

struct LawcheckResult {
    std::vector<WindowResult> windows;
    std::vector<Stage> stages;
    std::optional<double> first_flag;
    std::size_t flagged = 0;
    nlohmann::json report;
};

inline LawcheckResult run_lawcheck(const io::StreamData& data, const LawcheckOptions& opt) {
    if (opt.stride < 1) throw InputError("lawcheck: --stride must be >= 1");
    if (opt.window < data.sensor_count())
        throw InputError("lawcheck: --window must be >= the sensor count (" + std::to_string(data.sensor_count()) + ")");
    if (opt.window > data.sample_count()) throw InputError("lawcheck: --window exceeds the stream length");
    std::vector<LesFunction> fns;
    for (const auto& name : opt.indicators) fns.push_back(les_function(name));

    ScanOptions scan;
    scan.window = opt.window;
    scan.stride = opt.stride;
    scan.seed = opt.seed;
    scan.indicators = fns;
    LawcheckResult res;
    res.windows = scan_stream(data.values, data.times, scan);

    std::vector<bool> flags;
    std::vector<double> labels;
    for (const auto& w : res.windows) {
        flags.push_back(w.flag());
        labels.push_back(w.t_end);
        if (w.flag()) {
            ++res.flagged;
            if (!res.first_flag) res.first_flag = w.t_end;
        }
    }
    // Run lengths only mean something on stride-1 scans of at least T windows.
    const bool segment = opt.stride == 1 && flags.size() >= opt.window;
    if (segment) res.stages = stage_segmentation(flags, labels, opt.window);

    const double c = static_cast<double>(data.sensor_count()) / static_cast<double>(opt.window);
    auto& j = res.report;
    j["input"] = opt.input.string();
    j["window"] = opt.window;
    j["stride"] = opt.stride;
    j["seed"] = opt.seed;
    j["sensors"] = data.sensor_count();
    j["c"] = c;
    j["msr_theoretical"] = msr_theoretical(c, scan.ring.copies);
    j["ring_delta"] = scan.ring.delta;
    j["mp_spike_margin"] = scan.mp.spike_margin;
    j["windows"] = res.windows.size();
    j["flagged_windows"] = res.flagged;
    j["flag_fraction"] = static_cast<double>(res.flagged) / static_cast<double>(res.windows.size());
    j["first_flag_t_end"] = res.first_flag ? nlohmann::json(*res.first_flag) : nlohmann::json(nullptr);
    j["stages"] = segment ? io::to_json(res.stages) : nlohmann::json(nullptr);
    return res;
}

inline int cmd_lawcheck(const LawcheckOptions& opt, std::ostream& log) {
    if (opt.input.empty()) throw InputError("lawcheck: --input is required");
    if (opt.output.empty()) throw InputError("lawcheck: --output is required");
    const io::StreamData data = io::read_stream(opt.input);
    const LawcheckResult res = run_lawcheck(data, opt);

    const std::size_t n = data.sensor_count();
    const double msr_theory = msr_theoretical(static_cast<double>(n) / static_cast<double>(opt.window));
    std::vector<double> les_theory;
    for (const auto& name : opt.indicators) les_theory.push_back(les_theoretical(les_function(name), n, opt.window));
    std::vector<io::IndicatorRow> rows;
    for (const auto& w : res.windows) {
        rows.push_back({w.t_end, "msr", w.msr, w.msr / msr_theory, w.flag()});
        rows.push_back({w.t_end, "ring_fraction", w.ring_fraction, NAN, w.ring_anomaly});
        rows.push_back({w.t_end, "mp_fraction", w.mp_fraction, NAN, w.mp_anomaly});
        rows.push_back({w.t_end, "max_eigenvalue", w.max_eigenvalue, NAN, w.mp_anomaly});
        for (std::size_t k = 0; k < w.les.size(); ++k)
            rows.push_back({w.t_end, w.les[k].first, w.les[k].second,
                            les_theory[k] != 0.0 ? w.les[k].second / les_theory[k] : NAN, w.flag()});
    }

    // ESD of the first flagged window (or the first window) against its M-P law.
    std::size_t pick = 0;
    for (std::size_t k = 0; k < res.windows.size(); ++k)
        if (res.windows[k].flag()) {
            pick = k;
            break;
        }
    const auto spans = window_spans(data.sample_count(), opt.window, opt.stride, data.times);
    const SpectrumSample spec = covariance_spectrum(extract_window(data.values, spans[pick]), opt.seed);
    const LawSpec law = LawSpec::marchenko_pastur(static_cast<double>(n) / static_cast<double>(opt.window));
    const Esd esd = esd_from_spectrum(spec);
    std::vector<std::vector<double>> curve;
    for (std::size_t i = 0; i < esd.size(); ++i) curve.push_back({esd.grid[i], esd.cdf[i], law.cdf(esd.grid[i])});

    nlohmann::json report = res.report;
    report["esd_window_t_end"] = spans[pick].t_end;
    report["esd_sup_gap"] = convergence_gap(esd, law);
    io::write_atomic(sibling(opt.output, ".indicators.csv"), io::format_indicator_csv(rows));
    io::write_atomic(sibling(opt.output, ".esd.csv"), io::format_table({"x", "esd_cdf", "mp_cdf"}, curve));
    io::write_atomic(opt.output, report.dump(2) + "\n");

    log << "windows " << res.windows.size() << ", flagged " << res.flagged;
    if (res.first_flag) log << ", first flag at t_end=" << io::format_double(*res.first_flag);
    log << "\n";
    for (const auto& s : res.stages)
        if (s.type != StageType::steady)
            log << "  " << to_string(s.type) << " [" << io::format_double(s.t_begin) << ", "
                << io::format_double(s.t_end) << "] " << s.length() << " windows\n";
    return res.flagged > 0 ? kAnomaly : kClean;
}

// ---------------------------------------------------------------------------
// ustat
// ---------------------------------------------------------------------------

struct UstatOptions {
    std::filesystem::path input;
    std::filesystem::path output;  // JSON TestReport; empty writes nothing
    std::size_t q = 5;
    std::size_t n_g = 50;
    double alpha = 0.05;
    std::size_t top_sensors = 10;
};

inline int cmd_ustat(const UstatOptions& opt, std::ostream& log) {
    if (opt.q < 2) throw InputError("ustat: --q must be >= 2");
    if (opt.n_g < 4) throw InputError("ustat: --ng must be >= 4");
    if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw InputError("ustat: --alpha must lie in (0, 1)");
    if (opt.input.empty()) throw InputError("ustat: --input is required");
    const io::StreamData data = io::read_stream(opt.input);
    if (data.sample_count() < opt.q * opt.n_g)
        throw InputError("ustat: stream has " + std::to_string(data.sample_count()) + " samples, q * n_g = " +
                         std::to_string(opt.q * opt.n_g) + " required");
    const WindowedStream stream =
        make_windowed_stream(data.values, opt.q, opt.n_g, 0, data.times, data.meta.sampling_hz);
    const TestReport rep = pooled_statistic(stream, opt.alpha);

    nlohmann::json j = io::to_json(rep);
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& [a, b] : stream.timestamps) spans.push_back({{"t_first", a}, {"t_last", b}});
    j["windows"] = std::move(spans);
    j["q"] = opt.q;
    j["n_g"] = opt.n_g;
    if (rep.decision == Decision::H1 && data.sensor_count() >= 2) {
        const SensorRanking rank = localize_sensitive_sensors(stream);
        nlohmann::json top = nlohmann::json::array();
        for (std::size_t k = 0; k < std::min(opt.top_sensors, rank.order.size()); ++k)
            top.push_back({{"sensor", data.sensors[rank.order[k]]}, {"r_drop", rank.drop[rank.order[k]]}});
        j["sensitive_sensors"] = std::move(top);
    }
    if (!opt.output.empty()) io::write_atomic(opt.output, j.dump(2) + "\n");

    log << "R = " << io::format_double(rep.r_statistic) << ", threshold " << io::format_double(rep.threshold)
        << ", decision " << to_string(rep.decision) << "\n";
    return rep.decision == Decision::H1 ? kAnomaly : kClean;
}

// ---------------------------------------------------------------------------
// freeprob
// ---------------------------------------------------------------------------

struct FreeprobOptions {
    std::string polynomial = "anticommutator";
    std::string laws = "semicircle";
    std::size_t grid_points = 400;
    double epsilon = 1e-3;
    std::size_t n = 1000;
    std::size_t repetitions = 10;
    std::uint64_t seed = 0;
    std::filesystem::path output;  // CSV; empty writes nothing
};

struct FreeprobResult {
    DensityTable algorithm;
    std::vector<double> density_mc;
    double ks = 0.0;
};

inline PolynomialKind parse_polynomial(const std::string& name) {
    if (name == "anticommutator") return PolynomialKind::anticommutator;
    if (name == "anticommutator-plus-square") return PolynomialKind::anticommutator_plus_square;
    throw InputError("unknown polynomial '" + name + "' (expected anticommutator or anticommutator-plus-square)");
}

inline InputEnsemble parse_input_laws(const std::string& name) {
    if (name == "semicircle") return InputEnsemble::gaussian;
    if (name == "free-poisson") return InputEnsemble::wishart;
    throw InputError("unknown law pairing '" + name + "' (expected semicircle or free-poisson)");
}

/// Algorithmic density on a grid spanning the Monte-Carlo support +-1, with a
/// histogram of the pooled Monte-Carlo eigenvalues centred on the same grid.
inline FreeprobResult run_freeprob(const FreeprobOptions& opt) {
    if (opt.grid_points < 2) throw InputError("freeprob: --grid-points must be >= 2");
    if (!(opt.epsilon > 0.0)) throw InputError("freeprob: --epsilon must be > 0");
    const PolynomialKind kind = parse_polynomial(opt.polynomial);
    const InputEnsemble ens = parse_input_laws(opt.laws);

    MonteCarloConfig mc;
    mc.polynomial = kind;
    mc.ensembles = {ens, ens};
    mc.n = opt.n;
    mc.repetitions = opt.repetitions;
    mc.seed = opt.seed;
    const std::vector<double> sample = monte_carlo_spectrum(mc);

    const std::vector<double> grid = uniform_grid(sample.front() - 1.0, sample.back() + 1.0, opt.grid_points);
    PolynomialSpectrumOptions ps;
    ps.eta = opt.epsilon;
    const LawSpec law = limit_law(ens, mc.wishart_c);
    FreeprobResult res;
    res.algorithm = polynomial_spectrum(pencil_for(kind), {law, law}, grid, ps);

    const double h = grid[1] - grid[0];
    res.density_mc.assign(grid.size(), 0.0);
    for (double v : sample) {
        const auto k = static_cast<std::ptrdiff_t>(std::floor((v - grid.front()) / h + 0.5));
        if (k >= 0 && k < static_cast<std::ptrdiff_t>(grid.size())) res.density_mc[static_cast<std::size_t>(k)] += 1.0;
    }
    for (double& d : res.density_mc) d /= static_cast<double>(sample.size()) * h;
    res.ks = ks_table_vs_sample(res.algorithm, sample);
    return res;
}

inline int cmd_freeprob(const FreeprobOptions& opt, std::ostream& log) {
    const FreeprobResult res = run_freeprob(opt);
    if (!opt.output.empty()) {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < res.algorithm.x.size(); ++i)
            rows.push_back({res.algorithm.x[i], res.algorithm.density[i], res.density_mc[i]});
        io::write_atomic(opt.output, io::format_table({"x", "density_algorithm", "density_mc"}, rows));
    }
    log << "KS = " << io::format_double(res.ks) << "\n";
    if (const std::size_t f = res.algorithm.flagged_count(); f > 0)
        log << "solver did not converge at " << f << " of " << res.algorithm.x.size()
            << " grid points (interpolated)\n";
    return kClean;
}

// ---------------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------------

struct SpectrumOptions {
    std::filesystem::path input;  // stream CSV; when empty an ensemble is sampled
    std::string ensemble = "gue";
    std::size_t n = 1000;         // GUE size, or LUE row count p
    std::size_t t = 0;            // LUE sample count; 0 means 2n
    std::uint64_t seed = 0;
    std::filesystem::path output;
};

struct SpectrumResult {
    Esd esd;
    LawSpec law;
    double sup_gap = 0.0;
};

inline SpectrumResult run_spectrum(const SpectrumOptions& opt) {
    SpectrumResult res;
    SpectrumSample spec;
    if (!opt.input.empty()) {
        const io::StreamData data = io::read_stream(opt.input);
        if (data.sensor_count() > data.sample_count()) throw InputError("spectrum: stream has more sensors than samples");
        spec = covariance_spectrum({data.values, 0.0, false}, opt.seed);
        res.law = LawSpec::marchenko_pastur(static_cast<double>(data.sensor_count()) /
                                            static_cast<double>(data.sample_count()));
    } else if (opt.ensemble == "gue") {
        EnsembleSpec e{EnsembleKind::gue, opt.n, 0, 1.0, opt.seed};
        spec = eig_hermitian(sample_gue(e));
        for (double& v : spec.values) v /= std::sqrt(static_cast<double>(opt.n));
        res.law = LawSpec::semicircle();
    } else if (opt.ensemble == "lue") {
        const std::size_t t = opt.t == 0 ? 2 * opt.n : opt.t;
        if (opt.n > t) throw InputError("spectrum: LUE needs p <= T");
        EnsembleSpec e{EnsembleKind::lue, opt.n, t, 1.0, opt.seed};
        spec = eig_hermitian(sample_lue(e));
        res.law = LawSpec::marchenko_pastur(static_cast<double>(opt.n) / static_cast<double>(t));
    } else {
        throw InputError("unknown ensemble '" + opt.ensemble + "' (expected gue or lue)");
    }
    res.esd = esd_from_spectrum(spec);
    res.sup_gap = convergence_gap(res.esd, res.law);
    return res;
}

inline int cmd_spectrum(const SpectrumOptions& opt, std::ostream& log) {
    const SpectrumResult res = run_spectrum(opt);
    if (!opt.output.empty()) {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < res.esd.size(); ++i) {
            const double x = res.esd.grid[i];
            rows.push_back({x, res.esd.cdf[i], res.law.cdf(x), res.law.density(x)});
        }
        io::write_atomic(opt.output, io::format_table({"x", "esd_cdf", "law_cdf", "law_density"}, rows));
    }
    log << "law " << res.law.name();
    if (res.law.kind == LawKind::marchenko_pastur) log << " c=" << io::format_double(res.law.c);
    log << ", sup gap = " << io::format_double(res.sup_gap) << "\n";
    return kClean;
}

} // namespace rmtgrid::cli
