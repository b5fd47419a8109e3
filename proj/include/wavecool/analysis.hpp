#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wavecool/grid.hpp"

namespace wavecool {

enum class RJMethod { Peak, Conservation };

/// Effective Rayleigh-Jeans parameters with estimator provenance.
struct RJFit {
    double T;
    double mu;
    RJMethod method;
    double threshold = 0.0; ///< sigma used by the front estimate, if any
};

/// Threshold fronts (hat) and absolute support fronts of a spectrum.
struct FrontEstimate {
    std::optional<double> omega_hat_minus;
    std::optional<double> omega_hat_plus;
    std::optional<double> omega_minus;
    std::optional<double> omega_plus;
    bool boundary = false; ///< support touches a grid edge
};

/// Time series of a scalar observable plus a fit over a window.
struct ScalingSeries {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> argmax_omega; ///< argmax location (wg_series only)
};

struct PowerLawFit {
    double exponent;
    double prefactor;
    double residual; ///< RMS of log deviations
};

struct StretchedExpFit {
    double C;        ///< ln v = C t^{1/3} + offset
    double offset;
    double residual;
};

/// Rescaled traveling-wave coordinates: Omega(kappa) = W_g / |W_g|_inf,
/// kappa = ln(omega), tagged with tau = ln |W_g|_inf.
struct RescaledProfile {
    std::vector<double> kappa;
    std::vector<double> Omega;
    double tau;
    double g;
    std::size_t argmax_index;
};

struct TravelingSpeed {
    double c;
    double collapse_error; ///< max pairwise Linf distance after alignment
    bool unreliable = false;
};

struct ExponentReport {
    double front_exponent;       ///< b from omega_hat_plus ~ t^b
    double front_prefactor;
    double temperature_exponent; ///< a + b from T(t)
    double consistency_a;        ///< a recovered from b = -2a - 1
    double cooling_slope;        ///< ln(mu_hat) vs -(C+/w0) t^{1/3} slope ratio
    double front_residual;
    double temperature_residual;
};

/// Peak estimator: mu = argmax of W = sqrt(omega) N (3-point parabolic
/// refinement in ln omega), T = 2 sqrt(mu) W_inf. No fit when the max is
/// on the boundary.
std::optional<RJFit> fit_rj_peak(const Spectrum& s);

/// Conservation estimator: T = E0 / w+, mu = w+ exp(-w+/w0), w0 = E0/N0.
RJFit fit_rj_conservation(double E0, double N0, double omega_hat_plus);

/// Rightmost downward crossing of E_omega through sigma * max E, linearly
/// interpolated in (ln omega, E).
std::optional<double> front_right(const Spectrum& s, double sigma);

/// Leftmost upward crossing of N_omega through sigma_tilde * max N.
std::optional<double> front_left(const Spectrum& s, double sigma_tilde);

/// Outermost nodes with N above floor_fraction * max N.
FrontEstimate absolute_fronts(const Spectrum& s, double floor_fraction);

/// Per-time supremum of W_g = omega^{g+1/2} N and its argmax frequency.
ScalingSeries wg_series(const std::vector<Spectrum>& snapshots, double g);

/// Least squares of ln v against ln t over [t_lo, t_hi].
PowerLawFit fit_powerlaw(const std::vector<double>& t, const std::vector<double>& v,
                         double t_lo, double t_hi);

/// Least squares of ln v against t^{1/3} over [t_lo, t_hi].
StretchedExpFit fit_stretched_exp(const std::vector<double>& t, const std::vector<double>& v,
                                  double t_lo, double t_hi);

RescaledProfile rescale_profile(const Spectrum& s, double g);

/// Shift between successive profiles by cross-correlation in kappa;
/// c = d(shift)/d(tau) via regression. Collapse error restricted to
/// Omega > 1e-3.
TravelingSpeed traveling_speed(const std::vector<RescaledProfile>& profiles);

/// The traveling RJ profile Psi_RJ(sigma) = Z_g e^{sigma(g+1/2)}/(e^sigma+1)
/// for |g| < 1/2, normalized so its maximum is 1.
double psi_rj(double sigma, double g);
double psi_rj_argmax(double g);

/// Assembles the self-similar exponent report from a run's snapshot series.
ExponentReport selfsimilar_exponents(const std::vector<Spectrum>& snapshots,
                                     double sigma, double t_lo, double t_hi);

} // namespace wavecool
