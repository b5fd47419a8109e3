#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <variant>

#include "wavecool/config.hpp"

using namespace wavecool;
namespace fs = std::filesystem;

namespace {

fs::path write_cfg(const char* name, const std::string& body) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream f(p, std::ios::binary);
    f << body;
    return p;
}

/// presets/ relative to the source tree; the test binary runs from the
/// build tree, so walk up until the directory shows up.
fs::path preset_dir() {
    fs::path dir = fs::current_path();
    for (int i = 0; i < 6; ++i, dir = dir.parent_path())
        if (fs::exists(dir / "presets")) return dir / "presets";
    return "presets";
}

} // namespace

TEST_CASE("minimal dam config fills defaults") {
    const fs::path p = write_cfg("wavecool_cfg_min_dam.cfg",
                                 "model = dam\nomega_min = 1e-10\nomega_max = 1e8\n"
                                 "n_points = 1200\nomega0 = 1\nsigma0 = 0.1\n"
                                 "amplitude = 1\nt_final = 30\nt_first_output = 1e-4\n"
                                 "outputs_per_decade = 8\n");
    const ParsedConfig parsed = parse_config(p);
    const auto* cfg = std::get_if<DamConfig>(&parsed);
    REQUIRE(cfg);
    DamConfig defaults;
    CHECK(cfg->dt_init == defaults.dt_init);
    CHECK(cfg->dt_min == defaults.dt_min);
    CHECK(cfg->safety == defaults.safety);
    CHECK(cfg->growth == defaults.growth);
    CHECK(cfg->floor_fraction == defaults.floor_fraction);
}

TEST_CASE("non power-of-two resolution is rejected naming the field") {
    const fs::path p = write_cfg("wavecool_cfg_res300.cfg",
                                 "model = nls\nresolution = 300\nmembers = 4\n"
                                 "dt = 1e-3\nt_end = 1\n");
    try {
        parse_config(p);
        FAIL("expected a validation error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("resolution") != std::string::npos);
    }
}

TEST_CASE("unknown keys are rejected with the line number") {
    const fs::path p = write_cfg("wavecool_cfg_unknown.cfg",
                                 "model = nls\nresolution = 256\nmembers = 1\n"
                                 "dt = 1e-3\nt_end = 1\nfrobnicate = 7\n");
    CHECK_THROWS_AS(parse_config(p), ConfigError);
}

TEST_CASE("shipped presets parse and carry the pinned values") {
    const fs::path dir = preset_dir();
    REQUIRE(fs::exists(dir / "nls-paper.cfg"));

    const ParsedConfig nls = parse_config(dir / "nls-paper.cfg");
    const auto* ncfg = std::get_if<NlsConfig>(&nls);
    REQUIRE(ncfg);
    CHECK(ncfg->dt == 1e-6);
    CHECK(ncfg->nu == 5e-47);
    CHECK(ncfg->resolution == 2048);

    for (const char* name : {"dam-desk.cfg", "dam-paper.cfg", "nls-desk.cfg"})
        CHECK_NOTHROW(parse_config(dir / name));
}
