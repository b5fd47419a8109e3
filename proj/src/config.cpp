#include "wavecool/config.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace wavecool {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

class Fields {
public:
    Fields(const RawConfig& raw) : raw_(raw) {}

    bool has(const std::string& key) {
        seen_.insert(key);
        return raw_.entries.count(key) > 0;
    }

    std::string str(const std::string& key) {
        seen_.insert(key);
        const auto it = raw_.entries.find(key);
        if (it == raw_.entries.end())
            throw ConfigError("missing mandatory key `" + key + "`");
        return it->second.first;
    }

    double num(const std::string& key) {
        const std::string v = str(key);
        try {
            std::size_t pos = 0;
            const double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigError("key `" + key + "` (line " + std::to_string(line(key)) +
                              "): not a number: `" + v + "`");
        }
    }

    double num_or(const std::string& key, double fallback) {
        return has(key) ? num(key) : fallback;
    }

    long long integer(const std::string& key) {
        const double x = num(key);
        const long long i = static_cast<long long>(x);
        if (static_cast<double>(i) != x)
            throw ConfigError("key `" + key + "`: expected an integer");
        return i;
    }

    long long integer_or(const std::string& key, long long fallback) {
        return has(key) ? integer(key) : fallback;
    }

    /// Every present key must have been consumed by now.
    void reject_unknown() const {
        for (const auto& [key, value] : raw_.entries)
            if (!seen_.count(key))
                throw ConfigError("unknown key `" + key + "` (line " +
                                  std::to_string(value.second) + ")");
    }

private:
    int line(const std::string& key) const {
        const auto it = raw_.entries.find(key);
        return it == raw_.entries.end() ? 0 : it->second.second;
    }

    const RawConfig& raw_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

} // namespace

RawConfig read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    RawConfig raw;
    raw.text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());

    std::istringstream lines(raw.text);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected `key = value`");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": empty key or value");
        if (raw.entries.count(key))
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": duplicate key `" + key + "`");
        raw.entries[key] = {value, lineno};
    }
    return raw;
}

DamConfig make_dam_config(const RawConfig& raw) {
    Fields f(raw);
    f.str("model"); // consumed by the dispatcher
    DamConfig cfg;
    cfg.omega_min = f.num("omega_min");
    cfg.omega_max = f.num("omega_max");
    cfg.n_points = static_cast<std::size_t>(f.integer("n_points"));
    cfg.omega0 = f.num("omega0");
    cfg.sigma0 = f.num("sigma0");
    cfg.amplitude = f.num("amplitude");
    cfg.t_final = f.num("t_final");
    cfg.t_first_output = f.num("t_first_output");
    cfg.outputs_per_decade = static_cast<int>(f.integer("outputs_per_decade"));
    // dt controls and the positivity floor are the only optional keys.
    cfg.dt_init = f.num_or("dt_init", cfg.dt_init);
    cfg.dt_min = f.num_or("dt_min", cfg.dt_min);
    cfg.dt_max = f.num_or("dt_max", cfg.dt_max);
    cfg.safety = f.num_or("safety", cfg.safety);
    cfg.growth = f.num_or("growth", cfg.growth);
    cfg.floor_fraction = f.num_or("floor_fraction", cfg.floor_fraction);
    f.reject_unknown();

    require(cfg.omega_min > 0 && cfg.omega_min < cfg.omega_max,
            "field `omega_min`: need 0 < omega_min < omega_max");
    require(cfg.omega_min < cfg.omega0 && cfg.omega0 < cfg.omega_max,
            "field `omega0`: need omega_min < omega0 < omega_max");
    require(cfg.sigma0 > 0, "field `sigma0`: must be positive");
    require(cfg.amplitude > 0, "field `amplitude`: must be positive");
    require(cfg.n_points >= 16, "field `n_points`: need at least 16 nodes");
    require(cfg.t_final > 0, "field `t_final`: must be positive");
    require(cfg.t_first_output > 0 && cfg.t_first_output <= cfg.t_final,
            "field `t_first_output`: need 0 < t_first_output <= t_final");
    require(cfg.outputs_per_decade > 0, "field `outputs_per_decade`: must be positive");
    require(cfg.dt_init > 0 && cfg.dt_min > 0 && cfg.dt_max > 0,
            "field `dt_init`/`dt_min`/`dt_max`: must be positive");
    require(cfg.safety > 0 && cfg.safety <= 1, "field `safety`: need 0 < safety <= 1");
    require(cfg.growth >= 1, "field `growth`: must be >= 1");
    require(cfg.floor_fraction > 0 && cfg.floor_fraction < 1,
            "field `floor_fraction`: need 0 < floor_fraction < 1");
    return cfg;
}

NlsConfig make_nls_config(const RawConfig& raw) {
    Fields f(raw);
    f.str("model");
    NlsConfig cfg;
    cfg.resolution = static_cast<std::size_t>(f.integer("resolution"));
    cfg.members = static_cast<std::size_t>(f.integer("members"));
    cfg.dt = f.num("dt");
    cfg.t_end = f.num("t_end");
    cfg.k0 = f.num_or("k0", cfg.k0);
    cfg.sigma_init = f.num_or("sigma_init", cfg.sigma_init);
    cfg.amplitude = f.num_or("amplitude", cfg.amplitude);
    cfg.seed = static_cast<std::uint64_t>(f.integer_or("seed", static_cast<long long>(cfg.seed)));
    cfg.nu = f.num_or("nu", cfg.nu);
    cfg.dissipation_power =
        static_cast<int>(f.integer_or("dissipation_power", cfg.dissipation_power));
    cfg.t_first_output = f.num_or("t_first_output", cfg.t_first_output);
    cfg.outputs_per_decade =
        static_cast<int>(f.integer_or("outputs_per_decade", cfg.outputs_per_decade));
    cfg.bins_per_decade = static_cast<int>(f.integer_or("bins_per_decade", cfg.bins_per_decade));
    if (f.has("linear_only")) {
        const std::string v = f.str("linear_only");
        if (v == "true" || v == "1") cfg.linear_only = true;
        else if (v == "false" || v == "0") cfg.linear_only = false;
        else throw ConfigError("field `linear_only`: expected true/false");
    }
    f.reject_unknown();

    require(cfg.resolution >= 4 && (cfg.resolution & (cfg.resolution - 1)) == 0,
            "field `resolution`: must be a power of two >= 4");
    require(cfg.members >= 1, "field `members`: need at least one ensemble member");
    require(cfg.dt > 0, "field `dt`: must be positive");
    require(cfg.t_end > 0, "field `t_end`: must be positive");
    require(cfg.k0 > 0, "field `k0`: must be positive");
    require(cfg.sigma_init > 0, "field `sigma_init`: must be positive");
    require(cfg.amplitude > 0, "field `amplitude`: must be positive");
    require(cfg.nu >= 0, "field `nu`: must be non-negative");
    require(cfg.dissipation_power >= 1, "field `dissipation_power`: must be >= 1");
    require(cfg.t_first_output > 0 && cfg.t_first_output <= cfg.t_end,
            "field `t_first_output`: need 0 < t_first_output <= t_end");
    require(cfg.outputs_per_decade > 0, "field `outputs_per_decade`: must be positive");
    require(cfg.bins_per_decade > 0, "field `bins_per_decade`: must be positive");
    return cfg;
}

ParsedConfig parse_config(const std::filesystem::path& path) {
    const RawConfig raw = read_key_values(path);
    const auto it = raw.entries.find("model");
    if (it == raw.entries.end())
        throw ConfigError(path.string() + ": missing mandatory key `model` (dam or nls)");
    const std::string& model = it->second.first;
    if (model == "dam") return make_dam_config(raw);
    if (model == "nls") return make_nls_config(raw);
    throw ConfigError("field `model`: expected `dam` or `nls`, got `" + model + "`");
}

std::string config_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& run_dir) {
    nlohmann::json j;
    j["tool_version"] = m.tool_version;
    j["config_hash"] = m.config_hash;
    j["config"] = m.config_text;
    j["seeds"] = m.seeds;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["termination"] = m.termination;
    j["outputs"] = m.outputs;
    std::ofstream out(run_dir / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest in " + run_dir.string());
    out << j.dump(2) << '\n';
}

RunManifest load_manifest(const std::filesystem::path& run_dir) {
    std::ifstream in(run_dir / "manifest.json", std::ios::binary);
    if (!in) throw std::runtime_error("no manifest.json in " + run_dir.string());
    nlohmann::json j;
    in >> j;
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.config_text = j.at("config").get<std::string>();
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.started = j.at("started").get<std::string>();
    m.finished = j.at("finished").get<std::string>();
    m.termination = j.at("termination").get<std::string>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    if (m.config_hash != config_hash(m.config_text))
        throw std::runtime_error("manifest config hash does not match its stored config");
    return m;
}

} // namespace wavecool
