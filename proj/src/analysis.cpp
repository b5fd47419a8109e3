#include "wavecool/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wavecool {

namespace {

struct Line {
    double slope, intercept, rms;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) { sx += x[i]; sy += y[i]; }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    Line l;
    l.slope = sxy / sxx;
    l.intercept = my - l.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (l.slope * x[i] + l.intercept);
        ss += r * r;
    }
    l.rms = std::sqrt(ss / n);
    return l;
}

/// Parabolic vertex through three equally spaced samples (x spacing h);
/// returns (dx from the middle sample, refined peak value).
std::pair<double, double> parabolic_peak(double ym, double yc, double yp, double h) {
    const double denom = ym - 2.0 * yc + yp;
    if (denom >= 0.0) return {0.0, yc}; // degenerate: keep the node value
    const double dx = 0.5 * h * (ym - yp) / denom;
    const double val = yc - (ym - yp) * (ym - yp) / (8.0 * denom);
    return {dx, val};
}

} // namespace

std::optional<RJFit> fit_rj_peak(const Spectrum& s) {
    const auto W = weighted_profile(s, 0.0);
    const auto imax = static_cast<std::size_t>(
        std::max_element(W.begin(), W.end()) - W.begin());
    if (imax == 0 || imax + 1 == W.size())
        return std::nullopt; // maximum on the boundary
    const auto [dk, winf] =
        parabolic_peak(W[imax - 1], W[imax], W[imax + 1], s.grid().dlog());
    const double mu = std::exp(s.grid().log_omega()[imax] + dk);
    const double T = 2.0 * std::sqrt(mu) * winf;
    return RJFit{T, mu, RJMethod::Peak};
}

RJFit fit_rj_conservation(double E0, double N0, double omega_hat_plus) {
    if (!(E0 > 0 && N0 > 0 && omega_hat_plus > 0))
        throw std::invalid_argument("fit_rj_conservation: inputs must be positive");
    const double omega0 = E0 / N0;
    return RJFit{E0 / omega_hat_plus, omega_hat_plus * std::exp(-omega_hat_plus / omega0),
                 RJMethod::Conservation};
}

std::optional<double> front_right(const Spectrum& s, double sigma) {
    if (!(sigma > 0 && sigma < 1))
        throw std::invalid_argument("front_right: sigma must be in (0,1)");
    const auto E = energy_spectrum(s);
    const auto imax = static_cast<std::size_t>(
        std::max_element(E.begin(), E.end()) - E.begin());
    const double thr = sigma * E[imax];
    if (thr <= 0) return std::nullopt;
    const auto& lo = s.grid().log_omega();
    for (std::size_t i = E.size() - 1; i > imax; --i) {
        if (E[i - 1] >= thr && E[i] < thr) {
            const double f = (E[i - 1] - thr) / (E[i - 1] - E[i]);
            return std::exp(lo[i - 1] + f * (lo[i] - lo[i - 1]));
        }
    }
    return std::nullopt;
}

std::optional<double> front_left(const Spectrum& s, double sigma_tilde) {
    if (!(sigma_tilde > 0 && sigma_tilde < 1))
        throw std::invalid_argument("front_left: sigma must be in (0,1)");
    const auto& N = s.values();
    const auto imax = static_cast<std::size_t>(
        std::max_element(N.begin(), N.end()) - N.begin());
    const double thr = sigma_tilde * N[imax];
    if (thr <= 0) return std::nullopt;
    const auto& lo = s.grid().log_omega();
    for (std::size_t i = 0; i < imax; ++i) {
        if (N[i] < thr && N[i + 1] >= thr) {
            const double f = (thr - N[i]) / (N[i + 1] - N[i]);
            return std::exp(lo[i] + f * (lo[i + 1] - lo[i]));
        }
    }
    return std::nullopt; // monotone up to the max: no left front
}

FrontEstimate absolute_fronts(const Spectrum& s, double floor_fraction) {
    const auto& N = s.values();
    const double thr = floor_fraction * *std::max_element(N.begin(), N.end());
    FrontEstimate fe;
    std::size_t lo = 0, hi = N.size() - 1;
    while (lo < N.size() && N[lo] <= thr) ++lo;
    while (hi > 0 && N[hi] <= thr) --hi;
    if (lo > hi) return fe;
    fe.omega_minus = s.grid()[lo];
    fe.omega_plus = s.grid()[hi];
    fe.boundary = (lo == 0 || hi + 1 == N.size());
    return fe;
}

ScalingSeries wg_series(const std::vector<Spectrum>& snapshots, double g) {
    if (snapshots.size() < 3)
        throw std::invalid_argument("wg_series: need at least 3 snapshots");
    ScalingSeries out;
    for (const auto& s : snapshots) {
        const auto W = weighted_profile(s, g);
        const auto imax = static_cast<std::size_t>(
            std::max_element(W.begin(), W.end()) - W.begin());
        double val = W[imax];
        double lomega = s.grid().log_omega()[imax];
        if (imax > 0 && imax + 1 < W.size()) {
            const auto [dk, v] = parabolic_peak(W[imax - 1], W[imax], W[imax + 1],
                                                s.grid().dlog());
            val = v;
            lomega += dk;
        }
        out.times.push_back(s.time());
        out.values.push_back(val);
        out.argmax_omega.push_back(std::exp(lomega));
    }
    return out;
}

namespace {

std::pair<std::vector<double>, std::vector<double>>
window_logpairs(const std::vector<double>& t, const std::vector<double>& v,
                double t_lo, double t_hi, bool log_t) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_lo || t[i] > t_hi || !(v[i] > 0) || !(t[i] > 0)) continue;
        x.push_back(log_t ? std::log(t[i]) : std::cbrt(t[i]));
        y.push_back(std::log(v[i]));
    }
    if (x.size() < 4)
        throw std::runtime_error("fit window holds fewer than 4 usable points");
    return {std::move(x), std::move(y)};
}

} // namespace

PowerLawFit fit_powerlaw(const std::vector<double>& t, const std::vector<double>& v,
                         double t_lo, double t_hi) {
    auto [x, y] = window_logpairs(t, v, t_lo, t_hi, true);
    const Line l = least_squares(x, y);
    return {l.slope, std::exp(l.intercept), l.rms};
}

StretchedExpFit fit_stretched_exp(const std::vector<double>& t, const std::vector<double>& v,
                                  double t_lo, double t_hi) {
    auto [x, y] = window_logpairs(t, v, t_lo, t_hi, false);
    const Line l = least_squares(x, y);
    return {l.slope, l.intercept, l.rms};
}

RescaledProfile rescale_profile(const Spectrum& s, double g) {
    const auto W = weighted_profile(s, g);
    const auto imax = static_cast<std::size_t>(
        std::max_element(W.begin(), W.end()) - W.begin());
    if (!(W[imax] > 0))
        throw std::runtime_error("rescale_profile: |W_g|_inf vanishes");
    RescaledProfile p;
    p.kappa = s.grid().log_omega();
    p.Omega.resize(W.size());
    for (std::size_t i = 0; i < W.size(); ++i)
        p.Omega[i] = W[i] / W[imax];
    p.tau = std::log(W[imax]);
    p.g = g;
    p.argmax_index = imax;
    return p;
}

namespace {

/// Best shift (in kappa units) aligning b onto a, by cross-correlation
/// over integer lags with parabolic refinement. Positive shift means b is
/// displaced to the left of a by that amount.
std::pair<double, bool> best_shift(const std::vector<double>& a, const std::vector<double>& b,
                                   double dkappa) {
    const auto n = static_cast<long>(a.size());
    const long max_lag = n / 2;
    double best = -1.0;
    long best_lag = 0;
    std::vector<double> scores(2 * max_lag + 1);
    for (long lag = -max_lag; lag <= max_lag; ++lag) {
        double dot = 0, na = 0, nb = 0;
        for (long i = std::max(0L, -lag); i < std::min(n, n - lag); ++i) {
            const double va = a[i], vb = b[i + lag];
            dot += va * vb;
            na += va * va;
            nb += vb * vb;
        }
        const double score = (na > 0 && nb > 0) ? dot / std::sqrt(na * nb) : 0.0;
        scores[lag + max_lag] = score;
        if (score > best) { best = score; best_lag = lag; }
    }
    const bool on_edge = (best_lag == -max_lag || best_lag == max_lag);
    double refine = 0.0;
    if (!on_edge) {
        const double ym = scores[best_lag + max_lag - 1];
        const double yc = scores[best_lag + max_lag];
        const double yp = scores[best_lag + max_lag + 1];
        refine = parabolic_peak(ym, yc, yp, 1.0).first;
    }
    return {(static_cast<double>(best_lag) + refine) * dkappa, on_edge};
}

double interp_at(const std::vector<double>& kappa, const std::vector<double>& v, double k) {
    if (k <= kappa.front() || k >= kappa.back()) return 0.0;
    const double pos = (k - kappa.front()) / (kappa[1] - kappa[0]);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return v[i] * (1.0 - f) + v[i + 1] * f;
}

} // namespace

TravelingSpeed traveling_speed(const std::vector<RescaledProfile>& profiles) {
    if (profiles.size() < 3)
        throw std::invalid_argument("traveling_speed: need at least 3 profiles");
    const double dkappa = profiles[0].kappa[1] - profiles[0].kappa[0];

    TravelingSpeed ts{0.0, 0.0, false};
    std::vector<double> taus, shifts;
    taus.push_back(profiles[0].tau);
    shifts.push_back(0.0);
    for (std::size_t k = 1; k < profiles.size(); ++k) {
        auto [s, edge] = best_shift(profiles[k - 1].Omega, profiles[k].Omega, dkappa);
        if (edge) ts.unreliable = true;
        taus.push_back(profiles[k].tau);
        shifts.push_back(shifts.back() + s); // cumulative rightward displacement
    }
    ts.c = least_squares(taus, shifts).slope;

    // Collapse metric: align every profile onto the first and take the
    // worst pointwise deviation where the reference exceeds the floor.
    double worst = 0.0;
    const auto& ref = profiles[0];
    for (std::size_t k = 1; k < profiles.size(); ++k) {
        const double s = shifts[k];
        for (std::size_t i = 0; i < ref.kappa.size(); ++i) {
            if (ref.Omega[i] <= 1e-3) continue;
            const double other = interp_at(profiles[k].kappa, profiles[k].Omega,
                                           ref.kappa[i] + s);
            if (other <= 0.0) continue; // outside the shifted support
            worst = std::max(worst, std::abs(other - ref.Omega[i]));
        }
    }
    ts.collapse_error = worst;
    return ts;
}

double psi_rj_argmax(double g) {
    return std::log((g + 0.5) / (0.5 - g));
}

double psi_rj(double sigma, double g) {
    if (!(std::abs(g) < 0.5))
        throw std::invalid_argument("psi_rj: requires |g| < 1/2");
    const double zg = std::pow(g + 0.5, -(g + 0.5)) * std::pow(0.5 - g, -(0.5 - g));
    return zg * std::exp(sigma * (g + 0.5)) / (std::exp(sigma) + 1.0);
}

ExponentReport selfsimilar_exponents(const std::vector<Spectrum>& snapshots,
                                     double sigma, double t_lo, double t_hi) {
    if (!(t_hi / t_lo >= std::pow(10.0, 1.5)))
        throw std::invalid_argument("selfsimilar_exponents: window must span >= 1.5 decades");
    const double E0 = total_energy(snapshots.front());
    const double N0 = total_waveaction(snapshots.front());
    const double omega0 = E0 / N0;

    std::vector<double> t, wplus, That, muhat_x, muhat_y;
    for (const auto& s : snapshots) {
        const auto f = front_right(s, sigma);
        if (!f || !(s.time() > 0)) continue;
        t.push_back(s.time());
        wplus.push_back(*f);
        That.push_back(E0 / *f);
        const RJFit c = fit_rj_conservation(E0, N0, *f);
        if (c.mu > 0) {
            muhat_x.push_back(std::cbrt(s.time()));
            muhat_y.push_back(std::log(c.mu));
        }
    }

    const PowerLawFit fb = fit_powerlaw(t, wplus, t_lo, t_hi);
    const PowerLawFit ft = fit_powerlaw(t, That, t_lo, t_hi);

    ExponentReport rep;
    rep.front_exponent = fb.exponent;
    rep.front_prefactor = fb.prefactor;
    rep.temperature_exponent = ft.exponent;
    rep.consistency_a = -(fb.exponent + 1.0) / 2.0;
    rep.front_residual = fb.residual;
    rep.temperature_residual = ft.residual;

    // ln(mu_hat) ~ -(C+/w0) t^{1/3}: report fitted slope over predicted.
    std::vector<double> mx, my;
    for (std::size_t i = 0; i < muhat_x.size(); ++i) {
        const double ti = muhat_x[i] * muhat_x[i] * muhat_x[i];
        if (ti >= t_lo && ti <= t_hi) { mx.push_back(muhat_x[i]); my.push_back(muhat_y[i]); }
    }
    rep.cooling_slope = (mx.size() >= 4)
        ? least_squares(mx, my).slope / (-(fb.prefactor / omega0))
        : 0.0;
    return rep;
}

} // namespace wavecool
