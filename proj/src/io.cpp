#include "hwq/io.hpp"

#include <Eigen/Core>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace hwq {

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash missing file: " + p.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

void write_table_csv(const std::filesystem::path& p, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot open " + p.string());
    for (std::size_t c = 0; c < header.size(); ++c)
        out << header[c] << (c + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out << fmt_double(row[c]) << (c + 1 < row.size() ? "," : "\n");
    }
}

void write_timepath_csv(const std::filesystem::path& p, const TimePath& tp,
                        const std::string& value_name) {
    std::vector<std::vector<double>> rows;
    rows.reserve(tp.v.size());
    for (Eigen::Index i = 0; i < tp.v.size(); ++i)
        rows.push_back({tp.dt * static_cast<double>(i), tp.v(i)});
    write_table_csv(p, {"t", value_name}, rows);
}

void write_gridfunction_csv(const std::filesystem::path& p, const H1GridFunction& g) {
    std::vector<std::vector<double>> rows;
    rows.reserve(g.f.v.size());
    for (Eigen::Index i = 0; i < g.f.v.size(); ++i)
        rows.push_back({g.f.dr * static_cast<double>(i), g.f.v(i), g.df.v(i)});
    write_table_csv(p, {"r", "value", "deriv"}, rows);
}

OutputTracker::OutputTracker(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

OutputTracker::~OutputTracker() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) std::filesystem::remove(f, ec);
}

std::filesystem::path OutputTracker::file(const std::string& name) {
    auto p = dir_ / name;
    files_.push_back(p);
    return p;
}

RunManifest::RunManifest(std::string command, nlohmann::json config_echo) {
    j_["command"] = std::move(command);
    j_["config"] = std::move(config_echo);
    j_["versions"] = {{"hwq", "0.1.0"},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                    std::to_string(EIGEN_MINOR_VERSION)}};
}

void RunManifest::add(const std::string& key, const nlohmann::json& value) { j_[key] = value; }

void RunManifest::write(OutputTracker& out) {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : out.files()) {
        if (!std::filesystem::exists(f)) continue;
        char hex[20];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(fnv1a64_file(f)));
        files.push_back({{"path", f.filename().string()},
                         {"bytes", std::filesystem::file_size(f)},
                         {"fnv1a64", hex}});
    }
    j_["outputs"] = files;
    std::ofstream o(out.file("manifest.json"));
    o << j_.dump(2) << "\n";
}

}  // namespace hwq
