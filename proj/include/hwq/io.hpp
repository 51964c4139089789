#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hwq/grid.hpp"

namespace hwq {

/// Shortest round-trip decimal form; used everywhere so equal configs and
/// seeds give byte-identical files.
std::string fmt_double(double x);

std::uint64_t fnv1a64_file(const std::filesystem::path& p);

void write_table_csv(const std::filesystem::path& p, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);
void write_timepath_csv(const std::filesystem::path& p, const TimePath& tp,
                        const std::string& value_name);
void write_gridfunction_csv(const std::filesystem::path& p, const H1GridFunction& g);

/// Collects the files a command writes; on destruction without commit() the
/// partial outputs are removed.
class OutputTracker {
public:
    explicit OutputTracker(std::filesystem::path dir);
    ~OutputTracker();
    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path file(const std::string& name);
    void commit() { committed_ = true; }
    const std::vector<std::filesystem::path>& files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> files_;
    bool committed_ = false;
};

/// manifest.json: config echo, seeds, versions, residual summaries and a
/// content hash for every emitted file.
class RunManifest {
public:
    RunManifest(std::string command, nlohmann::json config_echo);
    void add(const std::string& key, const nlohmann::json& value);
    void write(OutputTracker& out);  // writes manifest.json listing all files so far

private:
    nlohmann::json j_;
};

}  // namespace hwq
