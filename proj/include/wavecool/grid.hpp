#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavecool {

/// Logarithmically spaced frequency axis shared by the DAM solver and the
/// analysis pipeline. Nodes are uniform in ln(omega); both omega and
/// ln(omega) arrays are stored so hot loops avoid repeated log/exp calls.
class LogFrequencyGrid {
public:
    LogFrequencyGrid(double omega_min, double omega_max, std::size_t n_points);

    double omega_min() const { return omega_[0]; }
    double omega_max() const { return omega_.back(); }
    std::size_t size() const { return omega_.size(); }

    const std::vector<double>& omega() const { return omega_; }
    const std::vector<double>& log_omega() const { return log_omega_; }

    /// Trapezoid quadrature weights in omega (non-uniform spacing).
    const std::vector<double>& weights() const { return weights_; }

    double operator[](std::size_t i) const { return omega_[i]; }

    /// Uniform spacing in ln(omega).
    double dlog() const { return dlog_; }

    /// Index of the node nearest to omega (clamped to the range).
    std::size_t nearest(double omega) const;

    bool operator==(const LogFrequencyGrid& other) const {
        return omega_ == other.omega_;
    }

private:
    std::vector<double> omega_;
    std::vector<double> log_omega_;
    std::vector<double> weights_;
    double dlog_ = 0.0;
};

/// Immutable snapshot of the wave action density N_omega at one instant.
/// Solvers produce a new Spectrum per output time; nothing mutates one
/// after construction, so snapshots are safely shareable across threads.
class Spectrum {
public:
    Spectrum(const LogFrequencyGrid& grid, std::vector<double> values, double time);

    const LogFrequencyGrid& grid() const { return *grid_; }
    const std::vector<double>& values() const { return values_; }
    double time() const { return time_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

private:
    const LogFrequencyGrid* grid_;
    std::vector<double> values_;
    double time_;
};

/// Rayleigh-Jeans parameters: temperature and chemical potential, both > 0.
struct RJParams {
    double temperature;
    double chemical_potential;

    RJParams(double T, double mu) : temperature(T), chemical_potential(mu) {
        if (!(T > 0.0) || !(mu > 0.0))
            throw std::invalid_argument("RJParams: T and mu must be positive");
    }
};

/// Total wave action and quadratic energy of a spectrum.
struct ConservedPair {
    double waveaction = 0.0;
    double energy = 0.0;
};

/// Thermal equilibrium wave action density N = T / (mu + omega).
double rj_eval(const RJParams& params, double omega);

/// N_omega sampled from the RJ family on every grid node.
Spectrum rj_spectrum(const LogFrequencyGrid& grid, const RJParams& params, double time = 0.0);

/// Trapezoid quadrature of N_omega over the grid.
double total_waveaction(const Spectrum& s);

/// Trapezoid quadrature of omega * N_omega over the grid.
double total_energy(const Spectrum& s);

ConservedPair conserved(const Spectrum& s);

/// Quadratic energy density E_omega = omega * N_omega, pointwise.
std::vector<double> energy_spectrum(const Spectrum& s);

/// Generalized vorticity W_g = omega^{g+1/2} N_omega, pointwise.
/// g = 0 gives the symmetric profile W = sqrt(omega) N_omega.
std::vector<double> weighted_profile(const Spectrum& s, double g);

} // namespace wavecool
