#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "wavecool/grid.hpp"

namespace wavecool {

/// Resonant four-wave frequency quartet: omega + omega1 = omega2 + omega3.
/// omega3 is derived from the other three at construction.
struct Quartet {
    double omega, omega1, omega2, omega3;

    Quartet(double w, double w1, double w2)
        : omega(w), omega1(w1), omega2(w2), omega3(w + w1 - w2) {
        if (omega < 0 || omega1 < 0 || omega2 < 0 || omega3 < 0)
            throw std::invalid_argument("Quartet: frequencies must stay non-negative");
    }
};

/// Interaction kernel evaluation S = S1 * K(q).
struct KernelValue {
    double S1;
    double q;      ///< elliptic modulus, in [0,1] by AM-GM
    double K_of_q;
    double S;
};

enum class Region { a, b, c, d, e };

/// Result of a limiting-region scaling scan of the reduced collision
/// integrand St[x] (power-law ansatz N = C omega^{-x}).
struct RegionScan {
    Region region;
    double x;                  ///< spectral exponent
    double measured_exponent;  ///< fitted power of r
    double predicted_exponent; ///< closed-form limit value
    bool convergent;
    bool identically_zero;     ///< region (e) style exact cancellation
    double fit_r2;
};

/// Complete elliptic integral of the first kind, modulus convention
/// K(q) = int_0^{pi/2} dt / sqrt(1 - q^2 sin^2 t), via AGM iteration.
/// Requires 0 <= q < 1 (logarithmic singularity at q = 1).
double elliptic_K(double q);

/// Kernel S = S1 K(q) with S1 = 4 / [pi (sqrt(w w1) + sqrt(w2 w3))] and
/// q = 2 (w w1 w2 w3)^{1/4} / (sqrt(w w1) + sqrt(w2 w3)). Degenerate
/// quartets with q -> 1 are clamped to 1 - 1e-14.
KernelValue kernel_S(const Quartet& quartet);

/// The four-wave bracket 1/N + 1/N1 - 1/N2 - 1/N3.
double detailed_balance(const std::array<double, 4>& n, const Quartet& quartet);

/// Scans the reduced integrand of region `region` over the radial scale
/// range [r_min, r_max] (>= 3 decades) and fits the power of r.
RegionScan region_scan(double x, Region region, double r_min, double r_max);

struct ConvergenceWindow {
    double x_lo;        ///< exclusive
    double x_hi;        ///< inclusive
    std::vector<std::pair<double, bool>> sweep; ///< per-x overall verdict
};

/// Sweeps x (step `step`) and intersects the per-region verdicts; the
/// widest contiguous convergent interval is returned (expected (1/2, 1]).
ConvergenceWindow convergence_window(double x_min = 0.0, double x_max = 1.25,
                                     double step = 0.05);

/// Low-frequency nonlocal reduction: dN/dt = A(t) + B(t) N_omega with
///   A = int (1 / 2 sqrt(w2 w3)) N1 N2 N3 delta(w1 - w2 - w3)
///   B = int (1 / 2 sqrt(w2 w3)) N1 N2 N3 (1/N1 - 1/N2 - 1/N3) delta(...)
/// over the spectrum's support (w1 = w2 + w3 eliminated analytically).
struct LowFreqCoeffs {
    double A;
    double B;
};

LowFreqCoeffs nonlocal_lowfreq_coeffs(const Spectrum& s);

/// Three-wave reduced UV rhs at frequency omega:
///   C(t) * int (R^w_{2,3} - R^3_{2,w} - R^2_{3,w}) dw2 dw3,
/// C(t) = (1/2) int N1 dw1. Positive just beyond a compact support's
/// right edge, which is why the WKE cannot keep a sharp right front.
double nonlocal_uv_rhs(const Spectrum& s, double omega);

std::string region_name(Region r);
std::optional<Region> region_from_name(const std::string& name);

} // namespace wavecool
