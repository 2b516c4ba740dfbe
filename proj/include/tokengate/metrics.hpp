#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace tokengate {

// Append-only line-delimited JSON metrics log. One self-describing record per
// line, flushed per record so a crash never loses committed entries.
class MetricsWriter {
public:
    explicit MetricsWriter(const std::filesystem::path& path);

    void append(const nlohmann::json& record);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

// Parse every record back; throws on unreadable or malformed lines.
std::vector<nlohmann::json> read_metrics(const std::filesystem::path& path);

} // namespace tokengate
