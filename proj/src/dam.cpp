#include "wavecool/dam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wavecool {

namespace {

/// Precomputed stencil geometry for a fixed grid. The second- and
/// first-derivative three-point formulas are exact for quadratics in
/// omega on the non-uniform grid, which makes RJ an exact discrete
/// fixed point (1/N linear in omega is annihilated).
struct StencilGeometry {
    const LogFrequencyGrid* grid = nullptr;
    std::vector<double> omega5;     // omega^5 per node
    std::vector<double> d2_m, d2_c, d2_p; // second-derivative coefficients
    std::vector<double> d1_m, d1_c, d1_p; // first-derivative coefficients
    std::vector<double> inv_dw;     // 1 / (w_{i+1} - w_i) per face
    std::vector<double> inv_weight; // 1 / trapezoid cell width

    explicit StencilGeometry(const LogFrequencyGrid& g) : grid(&g) {
        const auto& w = g.omega();
        const std::size_t n = g.size();
        omega5.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double w2 = w[i] * w[i];
            omega5[i] = w2 * w2 * w[i];
        }
        d2_m.assign(n, 0.0); d2_c.assign(n, 0.0); d2_p.assign(n, 0.0);
        d1_m.assign(n, 0.0); d1_c.assign(n, 0.0); d1_p.assign(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hm = w[i] - w[i - 1];
            const double hp = w[i + 1] - w[i];
            const double denom = hm * hp * (hm + hp);
            d2_m[i] = 2.0 * hp / denom;
            d2_c[i] = -2.0 * (hm + hp) / denom;
            d2_p[i] = 2.0 * hm / denom;
            d1_m[i] = -hp * hp / denom;
            d1_c[i] = (hp * hp - hm * hm) / denom;
            d1_p[i] = hm * hm / denom;
        }
        inv_dw.resize(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i)
            inv_dw[i] = 1.0 / (w[i + 1] - w[i]);
        inv_weight.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            inv_weight[i] = 1.0 / g.weights()[i];
    }

    /// K at the nodes; zero on the boundary nodes.
    void flux_K(const std::vector<double>& N, std::vector<double>& K) const {
        const std::size_t n = N.size();
        K.assign(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double inv_m = 1.0 / N[i - 1];
            const double inv_c = 1.0 / N[i];
            const double inv_p = 1.0 / N[i + 1];
            const double d2 = d2_m[i] * inv_m + d2_c[i] * inv_c + d2_p[i] * inv_p;
            const double n2 = N[i] * N[i];
            K[i] = omega5[i] * n2 * n2 * d2;
        }
    }

    /// Conservative rhs = -dQ/dw in flux-divergence form from face fluxes
    /// Q_{i+1/2} = -(K_{i+1} - K_i)/(w_{i+1} - w_i). Both invariant sums
    /// telescope to zero exactly under the K = 0 boundary closure.
    void rhs_from_K(const std::vector<double>& K, std::vector<double>& rhs) const {
        const std::size_t n = K.size();
        rhs.resize(n);
        double q_left = 0.0; // zero-flux face outside the left boundary
        for (std::size_t i = 0; i < n; ++i) {
            const double q_right = (i + 1 < n) ? -(K[i + 1] - K[i]) * inv_dw[i] : 0.0;
            rhs[i] = -(q_right - q_left) * inv_weight[i];
            q_left = q_right;
        }
    }
};

void check_positive(const std::vector<double>& N, double floor) {
    for (double v : N)
        if (!(v > floor))
            throw std::runtime_error("dam: positivity violation (N at or below floor)");
}

} // namespace

FluxTriple dam_fluxes(const Spectrum& s, double floor) {
    check_positive(s.values(), floor);
    const StencilGeometry geom(s.grid());
    FluxTriple f;
    geom.flux_K(s.values(), f.K);
    const std::size_t n = s.size();
    f.Q.assign(n, 0.0);
    f.P.resize(n);
    for (std::size_t i = 1; i + 1 < n; ++i)
        f.Q[i] = -(geom.d1_m[i] * f.K[i - 1] + geom.d1_c[i] * f.K[i] + geom.d1_p[i] * f.K[i + 1]);
    for (std::size_t i = 0; i < n; ++i)
        f.P[i] = s.grid()[i] * f.Q[i] + f.K[i];
    return f;
}

std::vector<double> dam_rhs(const Spectrum& s, double floor) {
    check_positive(s.values(), floor);
    const StencilGeometry geom(s.grid());
    std::vector<double> K, rhs;
    geom.flux_K(s.values(), K);
    geom.rhs_from_K(K, rhs);
    return rhs;
}

DamState dam_init(const DamConfig& cfg, const LogFrequencyGrid& grid) {
    if (!(cfg.omega_min < cfg.omega0 && cfg.omega0 < cfg.omega_max))
        throw std::invalid_argument("DamConfig: omega0 must lie inside the grid");
    if (!(cfg.sigma0 > 0))
        throw std::invalid_argument("DamConfig: sigma0 must be positive");

    std::vector<double> N(grid.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = grid[i] - cfg.omega0;
        N[i] = cfg.amplitude * std::exp(-d * d / (2.0 * cfg.sigma0 * cfg.sigma0));
        peak = std::max(peak, N[i]);
    }
    const double floor = cfg.floor_fraction * peak;
    for (auto& v : N) v = std::max(v, floor);

    DamState st{Spectrum(grid, std::move(N), 0.0), cfg.dt_init, 0.0, {}, 0, floor};
    st.prev_rhs.assign(grid.size(), 0.0);
    return st;
}

namespace {

/// Adaptive timestep: the relative-change bound safety * min N/|rhs| over
/// non-vacuum nodes, plus an explicit-stability bound for the linearized
/// fourth-order operator (AB2 has a small real-axis stability interval and
/// the near-RJ core has rhs ~ 0 while remaining stiff).
double dt_bound(const StencilGeometry& geom, const std::vector<double>& N,
                const std::vector<double>& rhs, double floor, double safety) {
    const auto& w = geom.grid->omega();
    const std::size_t n = N.size();
    double dt = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (N[i] <= floor * (1.0 + 1e-12)) continue; // vacuum
        if (rhs[i] != 0.0)
            dt = std::min(dt, safety * N[i] / std::abs(rhs[i]));
        // lambda_max ~ 16 w^5 N^2 / dw^4 for the stiffest grid mode
        const double dw = (i + 1 < n ? w[i + 1] - w[i] : w[i] - w[i - 1]);
        const double dw2 = dw * dw;
        const double lambda = 16.0 * geom.omega5[i] * N[i] * N[i] / (dw2 * dw2);
        if (lambda > 0.0)
            dt = std::min(dt, 0.5 / lambda);
    }
    return dt;
}

struct StepOutcome {
    std::vector<double> values;
    std::vector<double> rhs_used;
    double dt_used;
};

/// One accept/reject loop from (N, prev_rhs). Variable-step AB2:
///   N^{n+1} = N^n + dt [(1 + r/2) f^n - (r/2) f^{n-1}],  r = dt / dt_prev.
/// First step (dt_prev == 0) is the forward Euler bootstrap.
StepOutcome advance(const StencilGeometry& geom, const std::vector<double>& N,
                    const std::vector<double>& prev_rhs, double dt_prev, double dt_try,
                    double floor, const DamConfig& cfg) {
    std::vector<double> K, f;
    geom.flux_K(N, K);
    geom.rhs_from_K(K, f);

    double dt = std::min({dt_try, dt_bound(geom, N, f, floor, cfg.safety), cfg.dt_max});
    const std::size_t n = N.size();
    std::vector<double> out(n);
    while (true) {
        if (dt < cfg.dt_min)
            throw std::runtime_error("dam: dt underflow");
        const double r = (dt_prev > 0.0) ? dt / dt_prev : 0.0;
        const double c0 = 1.0 + 0.5 * r;
        const double c1 = -0.5 * r;
        bool reject = false;
        for (std::size_t i = 0; i < n; ++i) {
            double v = N[i] + dt * (c0 * f[i] + c1 * prev_rhs[i]);
            if (!std::isfinite(v)) { reject = true; break; }
            if (v <= floor) {
                if (N[i] > floor * (1.0 + 1e-12)) { reject = true; break; }
                v = floor; // vacuum node nudged below the floor: clamp
            }
            out[i] = v;
        }
        if (!reject)
            return {std::move(out), std::move(f), dt};
        dt *= 0.5;
    }
}

/// Edges of the dynamically relevant support. The infrared edge is read
/// from N relative to its maximum; the ultraviolet edge from E = omega N
/// relative to its maximum (N alone under-weights the flat-in-E
/// thermalized range, the energy density under-weights the infrared).
std::pair<std::size_t, std::size_t> support_edges(const std::vector<double>& omega,
                                                  const std::vector<double>& N) {
    constexpr double kRel = 1e-10;
    const std::size_t n = N.size();
    double n_max = 0.0, e_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        n_max = std::max(n_max, N[i]);
        e_max = std::max(e_max, omega[i] * N[i]);
    }
    std::size_t lo = 0, hi = n - 1;
    while (lo < n && N[lo] <= kRel * n_max) ++lo;
    while (hi > 0 && omega[hi] * N[hi] <= kRel * e_max) --hi;
    return {lo, hi};
}

} // namespace

DamState step_ab2(const DamState& state, const DamConfig& cfg) {
    const StencilGeometry geom(state.spectrum.grid());
    auto out = advance(geom, state.spectrum.values(), state.prev_rhs, state.dt_prev,
                       state.dt, state.floor, cfg);
    return DamState{
        Spectrum(state.spectrum.grid(), std::move(out.values),
                 state.spectrum.time() + out.dt_used),
        out.dt_used * cfg.growth,
        out.dt_used,
        std::move(out.rhs_used),
        state.step_count + 1,
        state.floor,
    };
}

DamRun run_dam(const DamConfig& cfg, const std::function<void(const Spectrum&)>& on_snapshot) {
    DamRun run;
    run.grid = std::make_shared<const LogFrequencyGrid>(cfg.omega_min, cfg.omega_max,
                                                        cfg.n_points);
    const LogFrequencyGrid& grid = *run.grid;
    const StencilGeometry geom(grid);

    DamState st = dam_init(cfg, grid);
    std::vector<double> N = st.spectrum.values();
    std::vector<double> prev_rhs = st.prev_rhs;
    double t = 0.0, dt_next = cfg.dt_init, dt_prev = 0.0;
    const double floor = st.floor;

    const auto emit = [&](double time) {
        Spectrum snap(grid, N, time);
        run.conserved.push_back({time, total_waveaction(snap), total_energy(snap)});
        if (on_snapshot) on_snapshot(snap);
        run.snapshots.push_back(std::move(snap));
    };
    emit(0.0);

    // one decade from either boundary, in node counts
    const auto decade_nodes = static_cast<std::size_t>(std::ceil(std::log(10.0) / grid.dlog()));

    double next_output = cfg.t_first_output;
    const double output_ratio = std::pow(10.0, 1.0 / cfg.outputs_per_decade);

    while (t < cfg.t_final) {
        StepOutcome out;
        try {
            out = advance(geom, N, prev_rhs, dt_prev, dt_next, floor, cfg);
        } catch (const std::runtime_error&) {
            run.termination = DamTermination::DtUnderflow;
            break;
        }
        N = std::move(out.values);
        prev_rhs = std::move(out.rhs_used);
        dt_prev = out.dt_used;
        dt_next = out.dt_used * cfg.growth;
        t += out.dt_used;
        ++run.total_steps;

        if (t >= next_output) {
            emit(t);
            while (next_output <= t) next_output *= output_ratio;

            const auto [lo, hi] = support_edges(grid.omega(), N);
            if (lo < decade_nodes || hi + decade_nodes >= grid.size() - 1) {
                run.termination = DamTermination::BoundaryReached;
                break;
            }
        }
    }
    if (run.snapshots.empty() || run.snapshots.back().time() != t)
        emit(t);
    run.t_end = t;
    return run;
}

} // namespace wavecool
