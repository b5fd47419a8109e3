#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "wavecool/grid.hpp"

namespace wavecool {

/// A spectrum loaded from disk, owning its grid.
struct LoadedSpectrum {
    std::shared_ptr<LogFrequencyGrid> grid;
    std::shared_ptr<Spectrum> spectrum;
};

/// Writes `<path>.csv` (header "omega,N") and `<path>.json` sidecar with
/// {time, omega_min, omega_max, n_points}. Values use 17 significant
/// digits so the round trip is bit-exact.
void save_spectrum(const Spectrum& s, const std::filesystem::path& path_no_ext);

LoadedSpectrum load_spectrum(const std::filesystem::path& path_no_ext);

/// Decimal serialization with round-trip fidelity for doubles.
std::string format_double(double v);

} // namespace wavecool
