#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wavecool/analysis.hpp"
#include "wavecool/config.hpp"
#include "wavecool/dam.hpp"
#include "wavecool/kernel.hpp"
#include "wavecool/nls.hpp"
#include "wavecool/spectrum_io.hpp"

namespace fs = std::filesystem;
using namespace wavecool;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitBoundary = 4;

std::string time_tag(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", t);
    return buf;
}

std::string opt_str(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

/// All spectrum_* snapshots of a run directory, sorted by time.
std::vector<Spectrum> load_run_snapshots(const fs::path& dir,
                                         std::vector<LoadedSpectrum>& keep_alive) {
    std::vector<fs::path> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const fs::path p = entry.path();
        if (p.extension() == ".json" && p.stem().string().rfind("spectrum_", 0) == 0)
            stems.push_back(p.parent_path() / p.stem());
    }
    if (stems.empty())
        throw std::runtime_error("no spectrum_* snapshots in " + dir.string());
    std::sort(stems.begin(), stems.end());
    std::vector<Spectrum> out;
    for (const auto& stem : stems) {
        keep_alive.push_back(load_spectrum(stem));
        out.push_back(*keep_alive.back().spectrum);
    }
    std::sort(out.begin(), out.end(),
              [](const Spectrum& a, const Spectrum& b) { return a.time() < b.time(); });
    return out;
}

/// Window flag `t_lo:t_hi`; the default is the last temporal decade of
/// the snapshot series.
std::pair<double, double> resolve_window(const std::string& window,
                                         const std::vector<Spectrum>& snaps) {
    if (!window.empty()) {
        const auto colon = window.find(':');
        if (colon == std::string::npos)
            throw ConfigError("--window expects `t_lo:t_hi`");
        const double lo = std::stod(window.substr(0, colon));
        const double hi = std::stod(window.substr(colon + 1));
        if (!(lo > 0 && hi > lo)) throw ConfigError("--window expects 0 < t_lo < t_hi");
        return {lo, hi};
    }
    const double t_hi = snaps.back().time();
    return {t_hi / 10.0, t_hi};
}

// ---------------------------------------------------------------- dam run

int cmd_dam_run(const fs::path& config_path, const fs::path& out_dir) {
    const RawConfig raw = read_key_values(config_path);
    const ParsedConfig parsed = parse_config(config_path);
    const auto* cfg = std::get_if<DamConfig>(&parsed);
    if (!cfg) throw ConfigError("dam run needs a config with `model = dam`");

    fs::create_directories(out_dir);
    RunManifest manifest;
    manifest.config_hash = config_hash(raw.text);
    manifest.config_text = raw.text;
    manifest.started = iso8601_now();

    std::size_t index = 0;
    DamRun run = run_dam(*cfg, [&](const Spectrum& s) {
        char name[48];
        std::snprintf(name, sizeof name, "spectrum_%04zu", index++);
        save_spectrum(s, out_dir / name);
        manifest.outputs.push_back(std::string(name) + ".csv");
        manifest.outputs.push_back(std::string(name) + ".json");

        const FluxTriple fl = dam_fluxes(s);
        const std::string flux_name = "fluxes_" + time_tag(s.time()) + ".csv";
        std::ofstream flux(out_dir / flux_name, std::ios::binary);
        flux << "omega,K,Q,P\n";
        for (std::size_t i = 0; i < s.size(); ++i)
            flux << format_double(s.grid().omega()[i]) << ',' << format_double(fl.K[i])
                 << ',' << format_double(fl.Q[i]) << ',' << format_double(fl.P[i]) << '\n';
        manifest.outputs.push_back(flux_name);
    });

    {
        std::ofstream cons(out_dir / "conserved.csv", std::ios::binary);
        cons << "t,N,E\n";
        for (const auto& c : run.conserved)
            cons << format_double(c.t) << ',' << format_double(c.waveaction) << ','
                 << format_double(c.energy) << '\n';
        manifest.outputs.push_back("conserved.csv");
    }

    switch (run.termination) {
        case DamTermination::FinalTime: manifest.termination = "final-time"; break;
        case DamTermination::BoundaryReached: manifest.termination = "boundary-reached"; break;
        case DamTermination::DtUnderflow: manifest.termination = "dt-underflow"; break;
    }
    manifest.finished = iso8601_now();
    write_manifest(manifest, out_dir);
    std::cout << "dam run: t_end=" << format_double(run.t_end)
              << " steps=" << run.total_steps << " termination=" << manifest.termination
              << " snapshots=" << run.snapshots.size() << '\n';

    if (run.termination == DamTermination::BoundaryReached) return kExitBoundary;
    if (run.termination == DamTermination::DtUnderflow) return kExitNumerical;
    return kExitOk;
}

// ---------------------------------------------------------------- nls run

int cmd_nls_run(const fs::path& config_path, const fs::path& out_dir,
                const fs::path& resume) {
    const RawConfig raw = read_key_values(config_path);
    const ParsedConfig parsed = parse_config(config_path);
    const auto* cfg = std::get_if<NlsConfig>(&parsed);
    if (!cfg) throw ConfigError("nls run needs a config with `model = nls`");

    fs::create_directories(out_dir);
    RunManifest manifest;
    manifest.config_hash = config_hash(raw.text);
    manifest.config_text = raw.text;
    manifest.seeds = {cfg->seed};
    manifest.started = iso8601_now();

    std::size_t index = 0;
    NlsRun run = run_nls(
        *cfg,
        [&](const EnsembleSpectrum& es) {
            const GriddedSpectrum gs = ensemble_to_spectrum(es);
            char name[48];
            std::snprintf(name, sizeof name, "spectrum_%04zu", index++);
            save_spectrum(*gs.spectrum, out_dir / name);
            manifest.outputs.push_back(std::string(name) + ".csv");
            manifest.outputs.push_back(std::string(name) + ".json");
        },
        out_dir, resume);

    {
        std::ofstream inv(out_dir / "invariants.csv", std::ios::binary);
        inv << "t,waveaction,quad_energy,hamiltonian,dissipated\n";
        for (const auto& i : run.invariants)
            inv << format_double(i.t) << ',' << format_double(i.waveaction) << ','
                << format_double(i.quad_energy) << ',' << format_double(i.hamiltonian)
                << ',' << format_double(i.dissipated) << '\n';
        manifest.outputs.push_back("invariants.csv");
    }
    for (std::size_t m = 0; m < cfg->members; ++m)
        manifest.outputs.push_back("member" + std::to_string(m) + ".ckpt");

    manifest.termination = run.blowup ? "blowup" : "final-time";
    manifest.finished = iso8601_now();
    write_manifest(manifest, out_dir);
    std::cout << "nls run: t_end=" << format_double(run.t_end)
              << " steps=" << run.total_steps << " termination=" << manifest.termination
              << " spectra=" << run.spectra.size() << '\n';
    return run.blowup ? kExitNumerical : kExitOk;
}

// ---------------------------------------------------------------- kernel

int cmd_kernel_scan(double x_min, double x_max, double step, const fs::path& out) {
    std::ofstream csv(out, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + out.string());
    csv << "x,region,measured_exponent,predicted_exponent,convergent,identically_zero,"
           "fit_r2\n";
    const Region regions[] = {Region::a, Region::b, Region::c, Region::d, Region::e};
    const int n = static_cast<int>(std::round((x_max - x_min) / step)) + 1;
    for (int i = 0; i < n; ++i) {
        const double x = x_min + i * step;
        for (Region r : regions) {
            // IR-divergence candidates scan small r, UV candidates large r.
            const bool ir = (r == Region::a || r == Region::b || r == Region::c);
            const RegionScan sc = ir ? region_scan(x, r, r == Region::a ? 1e-6 : 1e-8,
                                                   r == Region::a ? 1e-3 : 1e-4)
                                     : region_scan(x, r, 1e4, 1e8);
            csv << format_double(x) << ',' << region_name(r) << ','
                << format_double(sc.measured_exponent) << ','
                << format_double(sc.predicted_exponent) << ',' << (sc.convergent ? 1 : 0)
                << ',' << (sc.identically_zero ? 1 : 0) << ',' << format_double(sc.fit_r2)
                << '\n';
        }
    }
    const ConvergenceWindow win = convergence_window(x_min, x_max, step);
    csv << "window," << format_double(win.x_lo) << ',' << format_double(win.x_hi)
        << ",,,,\n";
    std::cout << "kernel scan: convergence window (" << format_double(win.x_lo) << ", "
              << format_double(win.x_hi) << "]\n";
    return kExitOk;
}

int cmd_kernel_eval(const std::string& quartet_arg) {
    double w, w1, w2;
    if (std::sscanf(quartet_arg.c_str(), "%lf,%lf,%lf", &w, &w1, &w2) != 3)
        throw ConfigError("--quartet expects `w,w1,w2`");
    const KernelValue kv = kernel_S(Quartet(w, w1, w2));
    std::cout << "S1=" << format_double(kv.S1) << " q=" << format_double(kv.q)
              << " K=" << format_double(kv.K_of_q) << " S=" << format_double(kv.S) << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- analyze

int cmd_analyze(const std::string& sub, const fs::path& in_dir, const fs::path& out,
                double sigma, double sigma_tilde, std::vector<double> gs,
                const std::string& window, double threshold) {
    std::vector<LoadedSpectrum> keep_alive;
    const std::vector<Spectrum> snaps = load_run_snapshots(in_dir, keep_alive);
    const auto [t_lo, t_hi] = resolve_window(window, snaps);

    std::ofstream csv(out, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + out.string());

    if (sub == "fronts") {
        csv << "t,omega_hat_minus,omega_hat_plus,omega_minus,omega_plus,boundary\n";
        for (const auto& s : snaps) {
            const FrontEstimate abs = absolute_fronts(s, threshold);
            csv << format_double(s.time()) << ',' << opt_str(front_left(s, sigma_tilde))
                << ',' << opt_str(front_right(s, sigma)) << ',' << opt_str(abs.omega_minus)
                << ',' << opt_str(abs.omega_plus) << ',' << (abs.boundary ? 1 : 0) << '\n';
        }
        return kExitOk;
    }

    if (sub == "rj") {
        const double N0 = total_waveaction(snaps.front());
        const double E0 = total_energy(snaps.front());
        csv << "t,T_peak,mu_peak,T_hat,mu_hat,omega_hat_plus\n";
        for (const auto& s : snaps) {
            const auto peak = fit_rj_peak(s);
            const auto wplus = front_right(s, sigma);
            std::string t_hat, mu_hat;
            if (wplus) {
                const RJFit hat = fit_rj_conservation(E0, N0, *wplus);
                t_hat = format_double(hat.T);
                mu_hat = format_double(hat.mu);
            }
            csv << format_double(s.time()) << ',' << (peak ? format_double(peak->T) : "")
                << ',' << (peak ? format_double(peak->mu) : "") << ',' << t_hat << ','
                << mu_hat << ',' << opt_str(wplus) << '\n';
        }
        return kExitOk;
    }

    if (sub == "wg") {
        if (gs.empty()) gs = {2.0};
        csv << "g,t,Wg_inf,argmax_omega\n";
        for (double g : gs) {
            const ScalingSeries series = wg_series(snaps, g);
            for (std::size_t i = 0; i < series.times.size(); ++i)
                csv << format_double(g) << ',' << format_double(series.times[i]) << ','
                    << format_double(series.values[i]) << ','
                    << format_double(series.argmax_omega[i]) << '\n';
            const PowerLawFit pl = fit_powerlaw(series.times, series.values, t_lo, t_hi);
            const StretchedExpFit se =
                fit_stretched_exp(series.times, series.values, t_lo, t_hi);
            std::cout << "g=" << format_double(g)
                      << ": power-law exponent=" << format_double(pl.exponent)
                      << " (residual " << format_double(pl.residual) << ")"
                      << ", stretched-exp C=" << format_double(se.C) << " (residual "
                      << format_double(se.residual) << ")\n";
        }
        return kExitOk;
    }

    if (sub == "collapse") {
        if (gs.empty()) gs = {3.5};
        csv << "g,c,collapse_error,unreliable,profiles\n";
        for (double g : gs) {
            std::vector<RescaledProfile> profiles;
            for (const auto& s : snaps)
                if (s.time() >= t_lo && s.time() <= t_hi)
                    profiles.push_back(rescale_profile(s, g));
            const TravelingSpeed ts = traveling_speed(profiles);
            csv << format_double(g) << ',' << format_double(ts.c) << ','
                << format_double(ts.collapse_error) << ',' << (ts.unreliable ? 1 : 0) << ','
                << profiles.size() << '\n';
            std::cout << "g=" << format_double(g) << ": c=" << format_double(ts.c)
                      << " collapse_error=" << format_double(ts.collapse_error)
                      << (ts.unreliable ? " (unreliable)" : "") << '\n';
        }
        return kExitOk;
    }

    if (sub == "exponents") {
        const ExponentReport report = selfsimilar_exponents(snaps, sigma, t_lo, t_hi);
        csv << "front_exponent,front_prefactor,temperature_exponent,consistency_a,"
               "cooling_slope,front_residual,temperature_residual\n";
        csv << format_double(report.front_exponent) << ','
            << format_double(report.front_prefactor) << ','
            << format_double(report.temperature_exponent) << ','
            << format_double(report.consistency_a) << ','
            << format_double(report.cooling_slope) << ','
            << format_double(report.front_residual) << ','
            << format_double(report.temperature_residual) << '\n';
        std::cout << "exponents: b=" << format_double(report.front_exponent)
                  << " C+=" << format_double(report.front_prefactor)
                  << " T-exponent=" << format_double(report.temperature_exponent) << '\n';
        return kExitOk;
    }

    throw ConfigError("unknown analyze subcommand `" + sub + "`");
}

// ---------------------------------------------------------------- reproduce

struct PlanStep {
    std::string description;
    std::function<int()> execute;
};

int cmd_reproduce(const std::string& tag, bool run, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const fs::path dam_dir = out_dir / "dam";
    const fs::path nls_dir = out_dir / "nls";
    const fs::path dam_cfg = out_dir / "dam-desk.cfg";
    const fs::path nls_cfg = out_dir / "nls-desk.cfg";

    auto write_dam_cfg = [&]() {
        std::ofstream f(dam_cfg, std::ios::binary);
        f << "# desk-scale free-decay preset\n"
             "model = dam\nomega_min = 1e-10\nomega_max = 1e8\nn_points = 1200\n"
             "omega0 = 1\nsigma0 = 0.1\namplitude = 1\nt_final = 30\n"
             "t_first_output = 1e-4\noutputs_per_decade = 8\n";
    };
    auto write_nls_cfg = [&]() {
        std::ofstream f(nls_cfg, std::ios::binary);
        f << "# desk-scale ensemble preset\n"
             "model = nls\nresolution = 256\nmembers = 4\ndt = 1e-2\nt_end = 20\n"
             "k0 = 8\nsigma_init = 0.25\namplitude = 0.1\nseed = 11\n"
             "nu = 1e-31\ndissipation_power = 8\nt_first_output = 0.1\n"
             "outputs_per_decade = 12\n";
    };
    auto dam_run_step = PlanStep{"dam run --config " + dam_cfg.string() + " --out " +
                                     dam_dir.string(),
                                 [&]() {
                                     write_dam_cfg();
                                     const int rc = cmd_dam_run(dam_cfg, dam_dir);
                                     return rc == kExitBoundary ? kExitOk : rc;
                                 }};
    auto nls_run_step = PlanStep{"nls run --config " + nls_cfg.string() + " --out " +
                                     nls_dir.string(),
                                 [&]() {
                                     write_nls_cfg();
                                     return cmd_nls_run(nls_cfg, nls_dir, {});
                                 }};
    auto analyze_step = [&](const std::string& sub, const fs::path& dir, double sigma,
                            double sigma_tilde, std::vector<double> gs) {
        const fs::path report = out_dir / (tag + "_" + sub +
                                           (dir == nls_dir ? "_nls" : "_dam") + ".csv");
        std::string desc = "analyze " + sub + " --in " + dir.string() + " --out " +
                           report.string() + " --sigma " + std::to_string(sigma);
        for (double g : gs) desc += " --g " + std::to_string(g);
        return PlanStep{desc, [=]() {
                            return cmd_analyze(sub, dir, report, sigma, sigma_tilde, gs,
                                               "", 1e-15);
                        }};
    };
    auto kernel_step = PlanStep{"kernel scan --x-min 0 --x-max 1.25 --step 0.05 --out " +
                                    (out_dir / "fig9_regions.csv").string(),
                                [&]() {
                                    return cmd_kernel_scan(0.0, 1.25, 0.05,
                                                           out_dir / "fig9_regions.csv");
                                }};

    std::vector<PlanStep> plan;
    if (tag == "fig1") {
        plan = {dam_run_step, nls_run_step};
    } else if (tag == "fig2") {
        plan = {dam_run_step, nls_run_step, analyze_step("rj", dam_dir, 0.4, 0.4, {}),
                analyze_step("fronts", dam_dir, 0.4, 0.4, {}),
                analyze_step("rj", nls_dir, 0.7, 0.7, {}),
                analyze_step("fronts", nls_dir, 0.7, 0.7, {})};
    } else if (tag == "fig2a") {
        plan = {dam_run_step, nls_run_step, analyze_step("rj", dam_dir, 0.2, 0.2, {}),
                analyze_step("rj", nls_dir, 0.2, 0.2, {})};
    } else if (tag == "fig3") {
        plan = {dam_run_step, analyze_step("fronts", dam_dir, 0.4, 0.4, {}),
                analyze_step("rj", dam_dir, 0.4, 0.4, {})};
    } else if (tag == "fig4") {
        plan = {dam_run_step,
                analyze_step("wg", dam_dir, 0.4, 0.4, {2.0, 2.5, 3.0, 3.5}),
                analyze_step("collapse", dam_dir, 0.4, 0.4, {3.5})};
    } else if (tag == "fig5") {
        plan = {dam_run_step,
                analyze_step("wg", dam_dir, 0.4, 0.4, {-0.5, -1.0, -2.0, -3.0}),
                analyze_step("collapse", dam_dir, 0.4, 0.4, {-2.0})};
    } else if (tag == "fig6") {
        plan = {dam_run_step, analyze_step("wg", dam_dir, 0.4, 0.4, {1.5}),
                analyze_step("collapse", dam_dir, 0.4, 0.4, {0.0})};
    } else if (tag == "fig7") {
        plan = {nls_run_step, analyze_step("wg", nls_dir, 0.7, 0.7, {1.5, 2.5, 3.5}),
                analyze_step("collapse", nls_dir, 0.7, 0.7, {3.5})};
    } else if (tag == "fig8") {
        plan = {nls_run_step, analyze_step("wg", nls_dir, 0.7, 0.7, {-0.5, -0.125})};
    } else if (tag == "fig9") {
        plan = {kernel_step};
    } else {
        throw ConfigError("unknown figure tag `" + tag + "` (fig1..fig9)");
    }

    for (const auto& step : plan) std::cout << "plan: wavecool " << step.description << '\n';
    if (!run) return kExitOk;
    for (const auto& step : plan) {
        std::cout << "exec: wavecool " << step.description << '\n';
        const int rc = step.execute();
        if (rc != kExitOk) return rc;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale dynamical-cooling simulation and analysis suite"};
    app.require_subcommand(1);

    std::string config_path, out_path, resume_path, quartet, window, fig_tag;
    std::string analyze_sub;
    double x_min = 0.0, x_max = 1.25, x_step = 0.05;
    double sigma = 0.4, sigma_tilde = 0.4, threshold = 1e-15;
    std::vector<double> g_values;
    bool do_run = false;

    auto* dam = app.add_subcommand("dam", "Differential approximation model solver");
    auto* dam_run = dam->add_subcommand("run", "Integrate the DAM");
    dam_run->add_option("--config", config_path, "key=value config file")->required();
    dam_run->add_option("--out", out_path, "output directory")->required();

    auto* nls = app.add_subcommand("nls", "2D NLS pseudospectral solver");
    auto* nls_run = nls->add_subcommand("run", "Integrate the NLS ensemble");
    nls_run->add_option("--config", config_path, "key=value config file")->required();
    nls_run->add_option("--out", out_path, "output directory")->required();
    nls_run->add_option("--resume", resume_path, "directory with member<i>.ckpt files");

    auto* kernel = app.add_subcommand("kernel", "Collision-kernel diagnostics");
    auto* kscan = kernel->add_subcommand("scan", "Region convergence scan");
    kscan->add_option("--x-min", x_min, "spectral exponent sweep start");
    kscan->add_option("--x-max", x_max, "spectral exponent sweep end");
    kscan->add_option("--step", x_step, "sweep step");
    kscan->add_option("--out", out_path, "report CSV")->required();
    auto* keval = kernel->add_subcommand("eval", "Evaluate S on one quartet");
    keval->add_option("--quartet", quartet, "w,w1,w2 (w3 = w + w1 - w2)")->required();

    auto* analyze = app.add_subcommand("analyze", "Post-process a run directory");
    analyze->add_option("sub", analyze_sub, "fronts|rj|wg|collapse|exponents")->required();
    analyze->add_option("--in", config_path, "run directory")->required();
    analyze->add_option("--out", out_path, "report CSV")->required();
    analyze->add_option("--sigma", sigma, "right-front energy threshold");
    analyze->add_option("--sigma-tilde", sigma_tilde, "left-front wave action threshold");
    analyze->add_option("--g", g_values, "weighted-norm exponent(s)");
    analyze->add_option("--window", window, "fit window t_lo:t_hi (default: last decade)");
    analyze->add_option("--threshold", threshold, "absolute front floor fraction");

    auto* reproduce = app.add_subcommand("reproduce", "Figure-data recipes");
    reproduce->add_option("fig", fig_tag, "fig1..fig9")->required();
    reproduce->add_option("--out", out_path, "output directory")->required();
    reproduce->add_flag("--run", do_run, "execute the plan (default: print it)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (dam_run->parsed()) return cmd_dam_run(config_path, out_path);
        if (nls_run->parsed()) return cmd_nls_run(config_path, out_path, resume_path);
        if (kscan->parsed()) return cmd_kernel_scan(x_min, x_max, x_step, out_path);
        if (keval->parsed()) return cmd_kernel_eval(quartet);
        if (analyze->parsed())
            return cmd_analyze(analyze_sub, config_path, out_path, sigma, sigma_tilde,
                               g_values, window, threshold);
        if (reproduce->parsed()) return cmd_reproduce(fig_tag, do_run, out_path);
        std::cerr << "no subcommand given\n";
        return kExitValidation;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}
