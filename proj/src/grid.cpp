#include "wavecool/grid.hpp"

#include <algorithm>
#include <cmath>

namespace wavecool {

LogFrequencyGrid::LogFrequencyGrid(double omega_min, double omega_max, std::size_t n_points) {
    if (!(omega_min > 0.0))
        throw std::invalid_argument("LogFrequencyGrid: omega_min must be > 0");
    if (!(omega_max > omega_min))
        throw std::invalid_argument("LogFrequencyGrid: omega_max must exceed omega_min");
    if (n_points < 8)
        throw std::invalid_argument("LogFrequencyGrid: need at least 8 points");

    omega_.resize(n_points);
    log_omega_.resize(n_points);
    const double l0 = std::log(omega_min);
    const double l1 = std::log(omega_max);
    dlog_ = (l1 - l0) / static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < n_points; ++i) {
        log_omega_[i] = l0 + dlog_ * static_cast<double>(i);
        omega_[i] = std::exp(log_omega_[i]);
    }
    // Pin the endpoints exactly.
    omega_.front() = omega_min;
    omega_.back() = omega_max;
    log_omega_.front() = l0;
    log_omega_.back() = l1;

    weights_.resize(n_points, 0.0);
    weights_[0] = 0.5 * (omega_[1] - omega_[0]);
    weights_[n_points - 1] = 0.5 * (omega_[n_points - 1] - omega_[n_points - 2]);
    for (std::size_t i = 1; i + 1 < n_points; ++i)
        weights_[i] = 0.5 * (omega_[i + 1] - omega_[i - 1]);
}

std::size_t LogFrequencyGrid::nearest(double omega) const {
    if (omega <= omega_.front()) return 0;
    if (omega >= omega_.back()) return omega_.size() - 1;
    const double pos = (std::log(omega) - log_omega_.front()) / dlog_;
    const auto i = static_cast<std::size_t>(std::lround(pos));
    return std::min(i, omega_.size() - 1);
}

Spectrum::Spectrum(const LogFrequencyGrid& grid, std::vector<double> values, double time)
    : grid_(&grid), values_(std::move(values)), time_(time) {
    if (values_.size() != grid.size())
        throw std::invalid_argument("Spectrum: value count does not match grid");
    for (double v : values_)
        if (v < 0.0 || !std::isfinite(v))
            throw std::invalid_argument("Spectrum: values must be finite and non-negative");
}

double rj_eval(const RJParams& params, double omega) {
    return params.temperature / (params.chemical_potential + omega);
}

Spectrum rj_spectrum(const LogFrequencyGrid& grid, const RJParams& params, double time) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        v[i] = rj_eval(params, grid[i]);
    return Spectrum(grid, std::move(v), time);
}

double total_waveaction(const Spectrum& s) {
    const auto& w = s.grid().weights();
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        sum += w[i] * s[i];
    return sum;
}

double total_energy(const Spectrum& s) {
    const auto& w = s.grid().weights();
    const auto& omega = s.grid().omega();
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        sum += w[i] * omega[i] * s[i];
    return sum;
}

ConservedPair conserved(const Spectrum& s) {
    return {total_waveaction(s), total_energy(s)};
}

std::vector<double> energy_spectrum(const Spectrum& s) {
    const auto& omega = s.grid().omega();
    std::vector<double> e(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        e[i] = omega[i] * s[i];
    return e;
}

std::vector<double> weighted_profile(const Spectrum& s, double g) {
    const auto& lo = s.grid().log_omega();
    std::vector<double> w(s.size());
    const double p = g + 0.5;
    for (std::size_t i = 0; i < s.size(); ++i)
        w[i] = std::exp(p * lo[i]) * s[i];
    return w;
}

} // namespace wavecool
