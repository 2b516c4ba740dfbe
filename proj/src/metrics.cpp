#include "tokengate/metrics.hpp"

#include "tokengate/error.hpp"

namespace tokengate {

MetricsWriter::MetricsWriter(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::trunc);
    if (!out_) fail(Errc::io_error, "cannot create metrics log: " + path.string());
}

void MetricsWriter::append(const nlohmann::json& record) {
    out_ << record.dump() << '\n';
    out_.flush();
    if (!out_) fail(Errc::io_error, "metrics write failed: " + path_.string());
}

std::vector<nlohmann::json> read_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::file_missing, "cannot open metrics log: " + path.string());
    std::vector<nlohmann::json> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            fail(Errc::malformed_input,
                 "metrics line " + std::to_string(line_no) + " is not valid JSON");
        }
        records.push_back(std::move(j));
    }
    return records;
}

} // namespace tokengate
