#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "wavecool/dam.hpp"
#include "wavecool/nls.hpp"

namespace wavecool {

inline constexpr const char* kToolVersion = "0.1.0";

/// Configuration or validation failure; the message names the offending
/// key or the line number.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` text with `#` comments, no nesting.
struct RawConfig {
    std::map<std::string, std::pair<std::string, int>> entries; ///< key -> (value, line)
    std::string text; ///< raw file bytes, kept for hashing and the manifest
};

RawConfig read_key_values(const std::filesystem::path& path);

/// Parses and validates a solver config; dispatch is on the mandatory
/// `model = dam | nls` key. Unknown keys are rejected.
using ParsedConfig = std::variant<DamConfig, NlsConfig>;
ParsedConfig parse_config(const std::filesystem::path& path);

DamConfig make_dam_config(const RawConfig& raw);
NlsConfig make_nls_config(const RawConfig& raw);

/// FNV-1a (64-bit) of the raw config bytes, hex-encoded.
std::string config_hash(const std::string& text);

/// Reproducibility metadata written next to every run's outputs.
struct RunManifest {
    std::string tool_version = kToolVersion;
    std::string config_hash;
    std::string config_text; ///< byte-for-byte copy of the config
    std::vector<std::uint64_t> seeds;
    std::string started;  ///< ISO 8601 UTC
    std::string finished;
    std::string termination;
    std::vector<std::string> outputs; ///< file names relative to the run dir
};

std::string iso8601_now();

void write_manifest(const RunManifest& m, const std::filesystem::path& run_dir);
RunManifest load_manifest(const std::filesystem::path& run_dir);

} // namespace wavecool
