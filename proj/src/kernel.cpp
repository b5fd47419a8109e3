#include "wavecool/kernel.hpp"

#include <algorithm>
#include <cmath>

namespace wavecool {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kQClampEps = 1e-14;

/// Least-squares slope of y against x, plus R^2.
struct LineFit {
    double slope;
    double intercept;
    double r2;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) { sx += x[i]; sy += y[i]; }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = (syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

/// The power-law collision integrand factor for a quartet:
/// S * (w w1 w2 w3)^{-x} * (w^x + w1^x - w2^x - w3^x).
/// Frequencies are passed as (1 + delta_i) relative to omega = 1 when the
/// deltas are small; expm1/log1p keep the bracket accurate under heavy
/// cancellation.
double bracket_near_one(double x, double d1, double d2, double d3) {
    const auto t = [x](double d) { return std::expm1(x * std::log1p(d)); };
    return t(d1) - t(d2) - t(d3);
}

double power_bracket(double x, double w, double w1, double w2, double w3) {
    return std::pow(w, x) + std::pow(w1, x) - std::pow(w2, x) - std::pow(w3, x);
}

} // namespace

double elliptic_K(double q) {
    if (!(q >= 0.0) || q >= 1.0)
        throw std::invalid_argument("elliptic_K: modulus must satisfy 0 <= q < 1");
    double a = 1.0;
    double b = std::sqrt((1.0 - q) * (1.0 + q));
    // Quadratic convergence: a handful of iterations reach round-off even
    // for q within 1e-14 of 1.
    for (int i = 0; i < 40 && std::abs(a - b) > 4e-16 * a; ++i) {
        const double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
    }
    return kPi / (2.0 * a);
}

KernelValue kernel_S(const Quartet& qt) {
    if (!(qt.omega > 0 && qt.omega1 > 0 && qt.omega2 > 0 && qt.omega3 > 0))
        throw std::invalid_argument("kernel_S: frequencies must be positive");
    const double s01 = std::sqrt(qt.omega * qt.omega1);
    const double s23 = std::sqrt(qt.omega2 * qt.omega3);
    const double denom = s01 + s23;

    KernelValue kv;
    kv.S1 = 4.0 / (kPi * denom);
    kv.q = 2.0 * std::sqrt(std::sqrt(qt.omega * qt.omega1 * qt.omega2 * qt.omega3)) / denom;
    // AM-GM puts q in [0,1]; degenerate quartets land numerically at or
    // above 1 and are clamped against the integrable log singularity.
    kv.q = std::min(kv.q, 1.0 - kQClampEps);
    kv.K_of_q = elliptic_K(kv.q);
    kv.S = kv.S1 * kv.K_of_q;
    return kv;
}

double detailed_balance(const std::array<double, 4>& n, const Quartet&) {
    for (double v : n)
        if (!(v > 0.0))
            throw std::invalid_argument("detailed_balance: wave actions must be positive");
    return 1.0 / n[0] + 1.0 / n[1] - 1.0 / n[2] - 1.0 / n[3];
}

std::string region_name(Region r) {
    switch (r) {
        case Region::a: return "a";
        case Region::b: return "b";
        case Region::c: return "c";
        case Region::d: return "d";
        case Region::e: return "e";
    }
    return "?";
}

std::optional<Region> region_from_name(const std::string& name) {
    if (name == "a") return Region::a;
    if (name == "b") return Region::b;
    if (name == "c") return Region::c;
    if (name == "d") return Region::d;
    if (name == "e") return Region::e;
    return std::nullopt;
}

namespace {

/// Reduced integrand of St[x] restricted to a region's limit
/// parameterization, including the polar jacobian where one applies.
double region_integrand(double x, Region region, double r) {
    switch (region) {
        case Region::a: {
            // All frequencies collapse onto omega = 1; polar angle fixed
            // away from the degenerate directions.
            const double th = 2.0;
            const double d1 = r * std::cos(th);
            const double d2 = r * std::sin(th);
            const double d3 = d1 - d2;
            const Quartet qt(1.0, 1.0 + d1, 1.0 + d2);
            const double S = kernel_S(qt).S;
            const double prod = std::pow((1.0 + d1) * (1.0 + d2) * (1.0 + d3), -x);
            return S * prod * bracket_near_one(x, d1, d2, d3) * r;
        }
        case Region::b: {
            // omega1 -> 0 alone, the others order one.
            const double w2 = 0.6;
            const Quartet qt(1.0, r, w2);
            const double S = kernel_S(qt).S;
            const double prod = std::pow(qt.omega1 * qt.omega2 * qt.omega3, -x);
            return S * prod * power_bracket(x, 1.0, r, w2, qt.omega3);
        }
        case Region::c: {
            // omega1, omega2 -> 0 jointly.
            const double th = 1.0;
            const double w1 = r * std::cos(th);
            const double w2 = r * std::sin(th);
            const Quartet qt(1.0, w1, w2);
            const double S = kernel_S(qt).S;
            const double prod = std::pow(w1 * w2 * qt.omega3, -x);
            return S * prod * power_bracket(x, 1.0, w1, w2, qt.omega3) * r;
        }
        case Region::d: {
            // omega1, omega2, omega3 -> infinity away from theta = pi/4.
            const double th = 0.5;
            const double w1 = r * std::cos(th);
            const double w2 = r * std::sin(th);
            const Quartet qt(1.0, w1, w2);
            const double S = kernel_S(qt).S;
            const double prod = std::pow(w1 * w2 * qt.omega3, -x);
            return S * prod * power_bracket(x, 1.0, w1, w2, qt.omega3) * r;
        }
        case Region::e: {
            // theta = pi/4 exactly: omega1 = omega2, so omega3 = omega and
            // the bracket cancels identically.
            const double w1 = r;
            const double w2 = r;
            const Quartet qt(1.0, w1, w2);
            const double S = kernel_S(qt).S;
            const double prod = std::pow(w1 * w2 * qt.omega3, -x);
            return S * prod * power_bracket(x, 1.0, w1, w2, qt.omega3) * r;
        }
    }
    return 0.0;
}

double predicted_region_exponent(double x, Region region) {
    switch (region) {
        case Region::a:
            return 3.0; // up to the ln(r^2) correction
        case Region::b:
            return x > 0 ? -x : 0.0;
        case Region::c:
            return x < 1 ? 0.5 * (1.0 - 2.0 * x) : 0.5 * (3.0 - 4.0 * x);
        case Region::d:
            return x >= 0 ? -2.0 * x : -3.0 * x;
        case Region::e:
            return 0.0; // integrand vanishes identically
    }
    return 0.0;
}

} // namespace

RegionScan region_scan(double x, Region region, double r_min, double r_max) {
    if (!(r_min > 0) || !(r_max / r_min >= 1e3))
        throw std::invalid_argument("region_scan: scale range must span >= 3 decades");

    constexpr int kSamples = 25;
    std::vector<double> lr, lI;
    double max_abs = 0.0;
    for (int i = 0; i < kSamples; ++i) {
        const double r = r_min * std::pow(r_max / r_min, i / double(kSamples - 1));
        const double I = region_integrand(x, region, r);
        max_abs = std::max(max_abs, std::abs(I));
        if (std::abs(I) > 0) {
            lr.push_back(std::log(r));
            lI.push_back(std::log(std::abs(I)));
        }
    }

    RegionScan scan;
    scan.region = region;
    scan.x = x;
    scan.predicted_exponent = predicted_region_exponent(x, region);

    if (max_abs == 0.0 || lr.size() < 4) {
        scan.identically_zero = true;
        scan.measured_exponent = 0.0;
        scan.fit_r2 = 1.0;
        scan.convergent = true;
        return scan;
    }

    const LineFit f = fit_line(lr, lI);
    scan.identically_zero = false;
    scan.measured_exponent = f.slope;
    scan.fit_r2 = f.r2;

    // Integrability threshold: r -> 0 limits need exponent > -1,
    // r -> infinity limits need exponent < -1. A poor power-law fit
    // (competing terms near a transition exponent) cannot certify
    // convergence either.
    const bool limit_at_zero = (region == Region::a || region == Region::b || region == Region::c);
    constexpr double kMargin = 1e-3;
    scan.convergent = f.r2 >= 0.99 &&
        (limit_at_zero ? (f.slope > -1.0 + kMargin) : (f.slope < -1.0 - kMargin));
    return scan;
}

ConvergenceWindow convergence_window(double x_min, double x_max, double step) {
    ConvergenceWindow win{0.0, 0.0, {}};
    const int n = static_cast<int>(std::round((x_max - x_min) / step)) + 1;
    std::vector<bool> ok(n, false);
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) {
        const double x = x_min + i * step;
        xs[i] = x;
        bool all = true;
        all = all && region_scan(x, Region::a, 1e-6, 1e-3).convergent;
        all = all && region_scan(x, Region::b, 1e-8, 1e-4).convergent;
        all = all && region_scan(x, Region::c, 1e-8, 1e-4).convergent;
        all = all && region_scan(x, Region::d, 1e4, 1e8).convergent;
        all = all && region_scan(x, Region::e, 1e4, 1e8).convergent;
        ok[i] = all;
        win.sweep.emplace_back(x, all);
    }

    // Longest contiguous convergent run; isolated single-point slivers
    // (the measure-zero x = 0 cancellation) do not form a window.
    int best_len = 0, best_start = -1;
    int i = 0;
    while (i < n) {
        if (!ok[i]) { ++i; continue; }
        int j = i;
        while (j < n && ok[j]) ++j;
        if (j - i > best_len) { best_len = j - i; best_start = i; }
        i = j;
    }
    if (best_start < 0 || best_len < 2)
        throw std::runtime_error("convergence_window: no convergent interval found");
    win.x_lo = (best_start > 0) ? xs[best_start - 1] : xs[best_start];
    win.x_hi = xs[best_start + best_len - 1];
    return win;
}

namespace {

/// Interpolates N at an arbitrary frequency. The reciprocal 1/N is taken
/// linear in omega between nodes, which is exact on the RJ family; nodes
/// with vanishing N fall back to linear interpolation of N itself.
/// Outside the grid the spectrum is treated as zero.
double interp_N(const Spectrum& s, double omega) {
    const auto& g = s.grid();
    if (omega < g.omega_min() || omega > g.omega_max()) return 0.0;
    const double pos = (std::log(omega) - g.log_omega().front()) / g.dlog();
    std::size_t i = static_cast<std::size_t>(std::max(0.0, std::floor(pos)));
    if (i + 1 >= g.size()) i = g.size() - 2;
    const double w0 = g[i], w1 = g[i + 1];
    const double t = std::clamp((omega - w0) / (w1 - w0), 0.0, 1.0);
    const double n0 = s[i], n1 = s[i + 1];
    if (n0 > 0.0 && n1 > 0.0) {
        const double inv = (1.0 / n0) * (1.0 - t) + (1.0 / n1) * t;
        return 1.0 / inv;
    }
    return n0 * (1.0 - t) + n1 * t;
}

} // namespace

LowFreqCoeffs nonlocal_lowfreq_coeffs(const Spectrum& s) {
    const auto& g = s.grid();
    const auto& w = g.weights();
    const double wmax = g.omega_max();
    double A = 0.0, B = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double w2 = g[j];
        const double n2 = s[j];
        if (n2 <= 0.0) continue;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double w3 = g[k];
            const double w1 = w2 + w3;
            if (w1 > wmax) continue; // integration restricted to the grid support
            const double n3 = s[k];
            if (n3 <= 0.0) continue;
            const double n1 = interp_N(s, w1);
            const double pref = w[j] * w[k] / (2.0 * std::sqrt(w2 * w3));
            A += pref * n1 * n2 * n3;
            // N1 N2 N3 (1/N1 - 1/N2 - 1/N3) = N2 N3 - N1 N3 - N1 N2
            B += pref * (n2 * n3 - n1 * n3 - n1 * n2);
        }
    }
    if (!std::isfinite(A) || !std::isfinite(B))
        throw std::runtime_error("nonlocal_lowfreq_coeffs: divergent integrand");
    return {A, B};
}

double nonlocal_uv_rhs(const Spectrum& s, double omega) {
    const auto& g = s.grid();
    if (omega < g.omega_min() || omega > g.omega_max())
        throw std::invalid_argument("nonlocal_uv_rhs: omega outside the grid");

    const double C = 0.5 * total_waveaction(s);
    const double n_w = interp_N(s, omega);
    constexpr int kQuad = 1024;

    // R^w_{2,3}: delta(w - w2 - w3). Substitution w2 = w sin^2(phi)
    // removes the inverse square-root endpoint singularities.
    double I1 = 0.0;
    {
        const double dphi = (kPi / 2.0) / kQuad;
        for (int i = 0; i < kQuad; ++i) {
            const double phi = (i + 0.5) * dphi;
            const double sn = std::sin(phi), cs = std::cos(phi);
            const double w2 = omega * sn * sn;
            const double w3 = omega - w2;
            const double n2 = interp_N(s, w2);
            const double n3 = interp_N(s, w3);
            // N_w N2 N3 (1/N_w - 1/N2 - 1/N3) = N2 N3 - N_w N3 - N_w N2
            I1 += 2.0 * (n2 * n3 - n_w * n3 - n_w * n2) * dphi;
        }
    }

    // -R^3_{2,w} (and its w2 <-> w3 mirror): delta(w3 - w2 - w), so
    // w3 = w + w2 with w2 in (0, wmax - w). Substitute w2 = u^2.
    double I2 = 0.0;
    if (g.omega_max() > omega) {
        const double umax = std::sqrt(g.omega_max() - omega);
        const double du = umax / kQuad;
        for (int i = 0; i < kQuad; ++i) {
            const double u = (i + 0.5) * du;
            const double w2 = u * u;
            const double w3 = omega + w2;
            const double n2 = interp_N(s, w2);
            const double n3 = interp_N(s, w3);
            // R^3_{2,w} bracket: N2 N_w - N3 N_w - N3 N2
            I2 -= 2.0 / std::sqrt(omega) * (n2 * n_w - n3 * n_w - n3 * n2) * du;
        }
    }

    const double rhs = C * (I1 + 2.0 * I2);
    if (!std::isfinite(rhs))
        throw std::runtime_error("nonlocal_uv_rhs: divergent integrand");
    return rhs;
}

} // namespace wavecool
