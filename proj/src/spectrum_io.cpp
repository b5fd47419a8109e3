#include "wavecool/spectrum_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace wavecool {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void save_spectrum(const Spectrum& s, const std::filesystem::path& path_no_ext) {
    auto csv_path = path_no_ext;
    csv_path += ".csv";
    std::ofstream csv(csv_path);
    if (!csv)
        throw std::runtime_error("cannot write " + csv_path.string());
    csv << "omega,N\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        csv << format_double(s.grid()[i]) << ',' << format_double(s[i]) << '\n';

    nlohmann::json meta = {
        {"time", s.time()},
        {"omega_min", s.grid().omega_min()},
        {"omega_max", s.grid().omega_max()},
        {"n_points", s.size()},
    };
    auto json_path = path_no_ext;
    json_path += ".json";
    std::ofstream js(json_path);
    js << meta.dump(2) << '\n';
}

LoadedSpectrum load_spectrum(const std::filesystem::path& path_no_ext) {
    auto json_path = path_no_ext;
    json_path += ".json";
    std::ifstream js(json_path);
    if (!js)
        throw std::runtime_error("cannot read " + json_path.string());
    nlohmann::json meta = nlohmann::json::parse(js);

    auto grid = std::make_shared<LogFrequencyGrid>(
        meta.at("omega_min").get<double>(), meta.at("omega_max").get<double>(),
        meta.at("n_points").get<std::size_t>());

    auto csv_path = path_no_ext;
    csv_path += ".csv";
    std::ifstream csv(csv_path);
    if (!csv)
        throw std::runtime_error("cannot read " + csv_path.string());
    std::string line;
    std::getline(csv, line); // header
    std::vector<double> values;
    values.reserve(grid->size());
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("malformed spectrum row: " + line);
        values.push_back(std::stod(line.substr(comma + 1)));
    }
    if (values.size() != grid->size())
        throw std::runtime_error("spectrum row count does not match sidecar n_points");

    LoadedSpectrum out;
    out.grid = grid;
    out.spectrum = std::make_shared<Spectrum>(*grid, std::move(values),
                                              meta.at("time").get<double>());
    return out;
}

} // namespace wavecool
