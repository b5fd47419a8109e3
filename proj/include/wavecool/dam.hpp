#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "wavecool/grid.hpp"

namespace wavecool {

/// Node-wise fluxes of the differential approximation model:
///   K = S0 w^5 N^4 d^2/dw^2 (1/N),  Q = -dK/dw,  P = w Q + K.
/// Boundary nodes carry K = Q = 0 (zero-flux closure).
struct FluxTriple {
    std::vector<double> K;
    std::vector<double> Q;
    std::vector<double> P;
};

struct DamConfig {
    // Grid
    double omega_min = 1e-10;
    double omega_max = 1e8;
    std::size_t n_points = 1200;

    // Gaussian initial condition N = amplitude * exp(-(w - w0)^2 / 2 s0^2)
    double omega0 = 1.0;
    double sigma0 = 0.1;
    double amplitude = 1.0;

    // Timestep control
    double dt_init = 1e-9;
    double dt_min = 1e-18;
    double dt_max = 1e30; ///< hard cap, mainly for convergence studies
    double safety = 0.1;
    double growth = 1.1;

    // Output schedule: log-uniform in t, `outputs_per_decade` snapshots
    // per decade between t_first_output and t_final.
    double t_first_output = 1e-4;
    double t_final = 30.0;
    int outputs_per_decade = 8;

    // Positivity floor, as a fraction of the initial maximum.
    double floor_fraction = 1e-30;
};

/// Mutable integrator state; one step of the two-step Adams-Bashforth
/// scheme consumes the previous rhs.
struct DamState {
    Spectrum spectrum;
    double dt = 0.0;
    double dt_prev = 0.0;          ///< dt of the last accepted step (0 before bootstrap)
    std::vector<double> prev_rhs;  ///< rhs at the previous accepted state
    long step_count = 0;
    double floor = 0.0;
};

enum class DamTermination {
    FinalTime,
    BoundaryReached, ///< a front came within one decade of a grid edge
    DtUnderflow,
};

struct ConservedSample {
    double t;
    double waveaction;
    double energy;
};

struct DamRun {
    /// Owns the frequency axis every snapshot (including copies handed to
    /// the on_snapshot callback) points into; keep it alive as long as any
    /// of those Spectrum objects are in use.
    std::shared_ptr<const LogFrequencyGrid> grid;
    std::vector<Spectrum> snapshots;
    std::vector<ConservedSample> conserved;
    DamTermination termination = DamTermination::FinalTime;
    long total_steps = 0;
    double t_end = 0.0;
};

/// Fluxes from a positive spectrum; throws if any value is at or below
/// `floor` (pass 0 to only reject non-positive values).
FluxTriple dam_fluxes(const Spectrum& s, double floor = 0.0);

/// Conservative rhs -dQ/dw in flux-divergence form: face fluxes
/// Q_{i+1/2} = -(K_{i+1} - K_i) / (w_{i+1} - w_i) divided by the trapezoid
/// cell widths. Both sum(rhs * w) and sum(omega rhs * w) telescope to zero
/// exactly under the zero-flux closure.
std::vector<double> dam_rhs(const Spectrum& s, double floor = 0.0);

DamState dam_init(const DamConfig& cfg, const LogFrequencyGrid& grid);

/// Advances one (possibly rejected-and-retried) step. First step is a
/// forward Euler bootstrap. Throws on dt underflow.
DamState step_ab2(const DamState& state, const DamConfig& cfg);

/// Full run: integrates until t_final or boundary approach, emitting
/// snapshots on the log-uniform schedule and the conserved-quantity series.
/// `on_snapshot`, when set, is called for every emitted spectrum.
DamRun run_dam(const DamConfig& cfg,
               const std::function<void(const Spectrum&)>& on_snapshot = {});

} // namespace wavecool
