#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "wavecool/analysis.hpp"
#include "wavecool/grid.hpp"

using namespace wavecool;

namespace {

Spectrum lognormal_spectrum(const LogFrequencyGrid& g, double center_kappa,
                            double width, double t = 0.0, double scale = 1.0) {
    std::vector<double> n(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double k = g.log_omega()[i] - center_kappa;
        n[i] = scale * std::exp(-0.5 * k * k / (width * width)) / g[i];
    }
    return Spectrum(g, std::move(n), t);
}

} // namespace

TEST_CASE("peak estimator recovers RJ parameters") {
    LogFrequencyGrid g(1e-5, 1e5, 2000);
    const double T = 2.2, mu = 0.7;
    auto fit = fit_rj_peak(rj_spectrum(g, RJParams(T, mu)));
    REQUIRE(fit.has_value());
    CHECK(fit->method == RJMethod::Peak);
    CHECK(fit->mu == doctest::Approx(mu).epsilon(1e-3));
    CHECK(fit->T == doctest::Approx(T).epsilon(1e-3));
}

TEST_CASE("peak estimator declines a boundary maximum") {
    LogFrequencyGrid g(10.0, 1e5, 500);
    // mu = 0.7 lies below the grid: W is monotone decreasing here.
    CHECK(!fit_rj_peak(rj_spectrum(g, RJParams(1.0, 0.7))).has_value());
}

TEST_CASE("conservation estimator closed form") {
    const double E0 = 6.0, N0 = 3.0, wp = 8.0; // w0 = 2
    RJFit fit = fit_rj_conservation(E0, N0, wp);
    CHECK(fit.method == RJMethod::Conservation);
    CHECK(fit.T == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(fit.mu == doctest::Approx(8.0 * std::exp(-4.0)).epsilon(1e-15));
    CHECK_THROWS(fit_rj_conservation(-1.0, 1.0, 1.0));
}

TEST_CASE("threshold fronts on a log-normal bump sit at the analytic crossings") {
    LogFrequencyGrid g(1e-6, 1e6, 4000);
    const double width = 1.0;
    Spectrum s = lognormal_spectrum(g, 0.0, width);
    // E = w N = exp(-kappa^2/2): crossing at kappa = sqrt(2 ln(1/sigma)).
    const double sigma = 0.4;
    auto wp = front_right(s, sigma);
    REQUIRE(wp.has_value());
    CHECK(std::log(*wp) == doctest::Approx(std::sqrt(2.0 * std::log(1.0 / sigma))).epsilon(1e-3));
    CHECK_THROWS(front_right(s, 0.0));
    CHECK_THROWS(front_right(s, 1.5));
}

TEST_CASE("left front crosses N on the infrared side") {
    LogFrequencyGrid g(1e-6, 1e6, 4000);
    std::vector<double> n(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double k = g.log_omega()[i];
        n[i] = std::exp(-0.5 * k * k);
    }
    Spectrum s(g, std::move(n), 0.0);
    const double sigma = 0.25;
    auto wm = front_left(s, sigma);
    REQUIRE(wm.has_value());
    CHECK(std::log(*wm) == doctest::Approx(-std::sqrt(2.0 * std::log(1.0 / sigma))).epsilon(1e-3));
}

TEST_CASE("left front is absent for a monotone decreasing spectrum") {
    LogFrequencyGrid g(0.1, 100.0, 400);
    CHECK(!front_left(rj_spectrum(g, RJParams(1.0, 0.01)), 0.5).has_value());
}

TEST_CASE("absolute fronts locate the support and flag grid contact") {
    LogFrequencyGrid g(1e-4, 1e4, 800);
    std::vector<double> n(g.size(), 0.0);
    for (std::size_t i = 100; i <= 600; ++i) n[i] = 1.0;
    FrontEstimate fe = absolute_fronts(Spectrum(g, std::move(n), 0.0), 1e-10);
    REQUIRE(fe.omega_minus.has_value());
    REQUIRE(fe.omega_plus.has_value());
    CHECK(*fe.omega_minus == doctest::Approx(g[100]).epsilon(1e-14));
    CHECK(*fe.omega_plus == doctest::Approx(g[600]).epsilon(1e-14));
    CHECK(!fe.boundary);

    std::vector<double> full(g.size(), 1.0);
    CHECK(absolute_fronts(Spectrum(g, std::move(full), 0.0), 1e-10).boundary);
}

TEST_CASE("power-law and stretched-exponential fits recover exact parameters") {
    std::vector<double> t, v, u;
    for (int i = 0; i < 40; ++i) {
        const double ti = 0.1 * std::pow(1.3, i);
        t.push_back(ti);
        v.push_back(2.5 * std::pow(ti, -0.333));
        u.push_back(0.7 * std::exp(4.5 * std::cbrt(ti)));
    }
    PowerLawFit pf = fit_powerlaw(t, v, 0.2, 1e3);
    CHECK(pf.exponent == doctest::Approx(-0.333).epsilon(1e-12));
    CHECK(pf.prefactor == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(pf.residual < 1e-12);

    StretchedExpFit sf = fit_stretched_exp(t, u, 0.2, 1e3);
    CHECK(sf.C == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(sf.offset == doctest::Approx(std::log(0.7)).epsilon(1e-10));

    CHECK_THROWS(fit_powerlaw(t, v, 1e6, 1e7)); // empty window
}

TEST_CASE("wg_series tracks the supremum of the weighted profile") {
    LogFrequencyGrid g(1e-4, 1e4, 1200);
    std::vector<Spectrum> snaps;
    for (double t : {1.0, 2.0, 4.0}) {
        // W_g max scales like t^2, argmax drifts like t (kappa = ln t).
        snaps.push_back(lognormal_spectrum(g, std::log(t), 0.8, t, t * t));
    }
    const double gexp = 0.5;
    ScalingSeries ser = wg_series(snaps, gexp);
    REQUIRE(ser.times.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        // W_g = w^{g+1/2} N = t^2 w^{g-1/2} exp(-(k - ln t)^2 / 2 w^2):
        // argmax kappa = ln t + (g - 1/2) width^2, peak value analytic.
        const double t = ser.times[i];
        const double kstar = std::log(t) + (gexp - 0.5) * 0.64;
        const double peak = t * t * std::exp((gexp - 0.5) * kstar)
            * std::exp(-0.5 * (kstar - std::log(t)) * (kstar - std::log(t)) / 0.64);
        CHECK(std::log(ser.argmax_omega[i]) == doctest::Approx(kstar).epsilon(2e-3));
        CHECK(ser.values[i] == doctest::Approx(peak).epsilon(1e-4));
    }
}

TEST_CASE("psi_rj is normalized to unit maximum at the analytic argmax") {
    for (double gexp : {-0.4, -0.125, 0.0, 0.2, 0.45}) {
        const double s = psi_rj_argmax(gexp);
        CHECK(psi_rj(s, gexp) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(psi_rj(s + 0.1, gexp) < 1.0);
        CHECK(psi_rj(s - 0.1, gexp) < 1.0);
    }
    CHECK(psi_rj_argmax(0.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK_THROWS(psi_rj(0.0, 0.75));
}

TEST_CASE("traveling_speed recovers the drift of synthetic profiles") {
    const double c = 0.5;
    const std::size_t n = 1600;
    const double dk = 20.0 / (n - 1);
    std::vector<RescaledProfile> profs;
    for (double tau : {0.0, 1.0, 2.0, 3.0}) {
        RescaledProfile p;
        p.tau = tau;
        p.g = 3.5;
        for (std::size_t i = 0; i < n; ++i) {
            const double k = -10.0 + i * dk;
            p.kappa.push_back(k);
            const double arg = k - c * tau;
            p.Omega.push_back(1.0 / std::cosh(2.0 * arg));
        }
        p.argmax_index = 0;
        profs.push_back(std::move(p));
    }
    TravelingSpeed ts = traveling_speed(profs);
    CHECK(!ts.unreliable);
    CHECK(ts.c == doctest::Approx(c).epsilon(0.02));
    CHECK(ts.collapse_error < 0.02);
    CHECK_THROWS(traveling_speed({profs[0], profs[1]}));
}

TEST_CASE("rescale_profile normalizes and tags tau") {
    LogFrequencyGrid g(1e-3, 1e3, 500);
    Spectrum s = lognormal_spectrum(g, 0.0, 0.7, 1.0, 3.0);
    RescaledProfile p = rescale_profile(s, 0.0);
    CHECK(p.Omega[p.argmax_index] == doctest::Approx(1.0).epsilon(1e-14));
    for (double v : p.Omega) CHECK(v <= 1.0 + 1e-14);
    const auto W = weighted_profile(s, 0.0);
    double wmax = 0.0;
    for (double v : W) wmax = std::max(wmax, v);
    CHECK(p.tau == doctest::Approx(std::log(wmax)).epsilon(1e-13));
}

TEST_CASE("selfsimilar_exponents recovers a synthetic front law") {
    LogFrequencyGrid g(1e-6, 1e8, 3000);
    const double b = 1.0 / 3.0, C = 2.0;
    std::vector<Spectrum> snaps;
    for (int i = 0; i < 24; ++i) {
        const double t = 0.01 * std::pow(10.0, i / 4.0);
        const double wp = C * std::pow(t, b);
        std::vector<double> n(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) {
            const double r = g[j] / wp;
            n[j] = (1.0 / (g[j] + 1e-3 * wp)) / (1.0 + std::pow(r, 8.0));
        }
        snaps.emplace_back(g, std::move(n), t);
    }
    ExponentReport rep = selfsimilar_exponents(snaps, 0.4, 0.1, 1e3);
    CHECK(rep.front_exponent == doctest::Approx(b).epsilon(0.02));
    CHECK(rep.consistency_a == doctest::Approx(-(b + 1.0) / 2.0).epsilon(0.02));
    CHECK(rep.temperature_exponent == doctest::Approx(-b).epsilon(0.1));
}
