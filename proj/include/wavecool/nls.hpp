#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "wavecool/grid.hpp"

namespace wavecool {

/// Periodic complex field on an n x n collocation grid, domain [0, 2pi)^2.
/// Row-major storage, x index fastest.
struct ComplexField {
    std::size_t n = 0;
    std::vector<std::complex<double>> values;

    ComplexField() = default;
    explicit ComplexField(std::size_t n_) : n(n_), values(n_ * n_) {}
    std::complex<double>& at(std::size_t ix, std::size_t iy) { return values[iy * n + ix]; }
    const std::complex<double>& at(std::size_t ix, std::size_t iy) const {
        return values[iy * n + ix];
    }
};

struct NlsConfig {
    std::size_t resolution = 256; ///< collocation points per side, power of two
    std::size_t members = 4;      ///< ensemble size

    // Initial spectrum |psi_k| = amplitude exp(-ln^2(k / k0) / 2 sigma_init^2),
    // zero mean mode, uniform random phases per mode and member.
    double k0 = 16.0;
    double sigma_init = 0.05;
    double amplitude = 0.3162;
    std::uint64_t seed = 1;

    double dt = 1e-4;
    double t_end = 100.0;
    double nu = 0.0;        ///< hyperviscosity coefficient
    int dissipation_power = 8; ///< Laplacian power p in -i nu (-lap)^p

    // Log-uniform output schedule (snapped to whole steps).
    double t_first_output = 0.1;
    int outputs_per_decade = 8;

    int bins_per_decade = 16; ///< angle-average binning of omega = |k|^2

    bool linear_only = false; ///< drop the cubic term (exact-solution tests)
};

/// Angle-averaged wave action spectrum: N(omega_i) averaged over ensemble
/// members, on log-uniform bins in omega; empty shells are omitted.
struct EnsembleSpectrum {
    std::vector<double> omega; ///< bin centers (geometric)
    std::vector<double> N;     ///< sum of (1/2)|psi_k|^2 in the bin / bin width
    double time = 0.0;
};

struct NlsInvariants {
    double t;
    double waveaction;  ///< (1/2) sum |psi_k|^2
    double quad_energy; ///< (1/2) sum omega_k |psi_k|^2
    double hamiltonian; ///< quad_energy + (1/4) <|psi|^4>
    double dissipated;  ///< waveaction lost to hyperviscosity so far
};

struct NlsRun {
    std::vector<EnsembleSpectrum> spectra;
    std::vector<NlsInvariants> invariants; ///< ensemble means
    long total_steps = 0;
    double t_end = 0.0;
    bool blowup = false;
};

/// Deterministic random-phase initial condition for one ensemble member.
/// Phases are a pure function of (seed, member, kx, ky).
ComplexField init_random_phase(const NlsConfig& cfg, std::size_t member);

/// Dealiased cubic term |psi|^2 psi: spectral coefficients are zero-padded
/// to (2n)^2 (alias-free for a cubic; 3n/2 only dealiases quadratics),
/// multiplied in physical space, and truncated back.
std::vector<std::complex<double>> dealiased_cubic(
    const std::vector<std::complex<double>>& psi_hat, std::size_t n);

/// One ETDRK4 integrator instance per ensemble member; owns FFT plans,
/// padded buffers and the precomputed exponential coefficients.
class NlsStepper {
public:
    NlsStepper(const NlsConfig& cfg);
    ~NlsStepper();
    NlsStepper(const NlsStepper&) = delete;
    NlsStepper& operator=(const NlsStepper&) = delete;

    /// Spectral coefficients, k-order as produced by the FFT (DC first).
    std::vector<std::complex<double>>& state() { return psi_hat_; }
    const std::vector<std::complex<double>>& state() const { return psi_hat_; }

    void load(const ComplexField& physical);
    ComplexField physical() const;

    void step();

    NlsInvariants invariants(double t) const;
    /// Accumulated (1/2)|psi_k|^2 for binning.
    std::vector<double> power() const;

    std::size_t n() const { return n_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::vector<std::complex<double>> psi_hat_;
    std::size_t n_;
    double dissipated_ = 0.0;
};

/// Bins (1/2)|psi_k|^2 over shells omega = |k|^2 into log-uniform bins.
EnsembleSpectrum bin_power(const std::vector<double>& mean_power, std::size_t n,
                           int bins_per_decade, double time);

/// Zero-filled Spectrum on the matching log grid, for the front and
/// scaling estimators. Returns the owning grid alongside.
struct GriddedSpectrum {
    std::shared_ptr<LogFrequencyGrid> grid;
    std::shared_ptr<Spectrum> spectrum;
};
GriddedSpectrum ensemble_to_spectrum(const EnsembleSpectrum& es);

/// Binary checkpoint of one member state.
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::complex<double>>& psi_hat, std::size_t n,
                     double t, std::uint64_t seed, std::size_t member, long step);
struct Checkpoint {
    std::vector<std::complex<double>> psi_hat;
    std::size_t n;
    double t;
    std::uint64_t seed;
    std::size_t member;
    long step;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Integrates the full ensemble (members run on separate threads) and
/// produces ensemble-averaged spectra and invariants on the log-uniform
/// output schedule. Throws on a non-finite state (blow-up guard) only if
/// it occurs on the very first step; later blow-ups terminate the run and
/// set `blowup`. When `resume_dir` holds member<i>.ckpt files, the run
/// continues from them to t_end (the dissipation tally restarts at zero:
/// the checkpoint layout does not carry it).
NlsRun run_nls(const NlsConfig& cfg,
               const std::function<void(const EnsembleSpectrum&)>& on_spectrum = {},
               const std::filesystem::path& checkpoint_dir = {},
               const std::filesystem::path& resume_dir = {});

} // namespace wavecool
