#include "tokengate/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tokengate/error.hpp"

namespace tokengate {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (errno != 0 || end == value.c_str() || *end != '\0') {
        fail(Errc::config_error, "key '" + key + "': cannot parse number from '" + value + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (errno != 0 || end == value.c_str() || *end != '\0' || value.find('-') != std::string::npos) {
        fail(Errc::config_error, "key '" + key + "': cannot parse unsigned integer from '" + value + "'");
    }
    return v;
}

std::uint32_t parse_u32(const std::string& key, const std::string& value) {
    const std::uint64_t v = parse_u64(key, value);
    if (v > 0xffffffffULL) fail(Errc::config_error, "key '" + key + "': value too large");
    return static_cast<std::uint32_t>(v);
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) fail(Errc::config_error, "key '" + key + "': empty list element");
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) fail(Errc::config_error, "key '" + key + "': empty list");
    return out;
}

} // namespace

std::uint32_t TrainConfig::resolved_hidden() const {
    return hidden != 0 ? hidden : std::max(16u, gen.dim);
}

void TrainConfig::validate() const {
    gen.validate();
    if (group_size < 2) {
        fail(Errc::config_error, "group_size must be >= 2 for meaningful group statistics");
    }
    if (!(learning_rate > 0.0)) fail(Errc::config_error, "learning_rate must be positive");
    if (!(advantage_epsilon > 0.0)) fail(Errc::config_error, "advantage_epsilon must be positive");
    if (!(pseudo.tau >= 1.0) || !(drift.tau >= 1.0)) {
        fail(Errc::config_error, "stage tau must be >= 1");
    }
    if (pseudo.videos == 0 || drift.videos == 0) {
        fail(Errc::config_error, "stage video counts must be >= 1");
    }
    if (eval_every == 0 || eval_videos == 0) {
        fail(Errc::config_error, "eval cadence and eval video count must be >= 1");
    }
    if (rho_grid.empty()) fail(Errc::config_error, "rho grid must not be empty");
    for (double rho : rho_grid) {
        if (!(rho > 0.0) || rho > 1.0) {
            fail(Errc::config_error, "rho values must lie in (0, 1]");
        }
    }
    if (!(oracle.temperature > 0.0)) fail(Errc::config_error, "oracle temperature must be positive");
}

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;

    auto apply = [&cfg](const std::string& key, const std::string& value) {
        if (key == "data.dim") cfg.gen.dim = parse_u32(key, value);
        else if (key == "data.tokens_per_frame") cfg.gen.tokens_per_frame = parse_u32(key, value);
        else if (key == "data.classes") cfg.gen.class_count = parse_u32(key, value);
        else if (key == "data.images_min") cfg.gen.images_min = parse_u32(key, value);
        else if (key == "data.images_max") cfg.gen.images_max = parse_u32(key, value);
        else if (key == "data.repeats_min") cfg.gen.repeats_min = parse_u32(key, value);
        else if (key == "data.repeats_max") cfg.gen.repeats_max = parse_u32(key, value);
        else if (key == "data.salient_per_frame") cfg.gen.salient_per_frame = parse_u32(key, value);
        else if (key == "data.evidence_magnitude") cfg.gen.evidence_magnitude = parse_double(key, value);
        else if (key == "data.seed") cfg.gen.seed = parse_u64(key, value);
        else if (key == "policy.hidden") cfg.hidden = parse_u32(key, value);
        else if (key == "oracle.seed") cfg.oracle.seed = parse_u64(key, value);
        else if (key == "oracle.temperature") cfg.oracle.temperature = parse_double(key, value);
        else if (key == "oracle.empty_ce_offset") cfg.oracle.empty_ce_offset = parse_double(key, value);
        else if (key == "pseudo.videos") cfg.pseudo.videos = parse_u32(key, value);
        else if (key == "pseudo.tau") cfg.pseudo.tau = parse_double(key, value);
        else if (key == "drift.videos") cfg.drift.videos = parse_u32(key, value);
        else if (key == "drift.tau") cfg.drift.tau = parse_double(key, value);
        else if (key == "drift.gamma") cfg.gen.drift_gamma = parse_double(key, value);
        else if (key == "drift.noise") cfg.gen.drift_noise = parse_double(key, value);
        else if (key == "drift.evidence_factor") cfg.gen.drift_evidence_factor = parse_double(key, value);
        else if (key == "drift.frames_min") cfg.gen.drift_frames_min = parse_u32(key, value);
        else if (key == "drift.frames_max") cfg.gen.drift_frames_max = parse_u32(key, value);
        else if (key == "train.group_size") cfg.group_size = parse_u32(key, value);
        else if (key == "train.learning_rate") cfg.learning_rate = parse_double(key, value);
        else if (key == "train.advantage_epsilon") cfg.advantage_epsilon = parse_double(key, value);
        else if (key == "train.eval_every") cfg.eval_every = parse_u32(key, value);
        else if (key == "train.eval_videos") cfg.eval_videos = parse_u32(key, value);
        else if (key == "eval.rho") cfg.rho_grid = parse_double_list(key, value);
        else fail(Errc::config_error, "unknown config key '" + key + "'");
    };

    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                fail(Errc::config_error, "line " + std::to_string(line_no) + ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(Errc::config_error, "line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            fail(Errc::config_error, "line " + std::to_string(line_no) + ": empty key or value");
        }
        if (section.empty()) {
            fail(Errc::config_error,
                 "line " + std::to_string(line_no) + ": key '" + key + "' outside any section");
        }
        apply(section + "." + key, value);
    }

    cfg.validate();
    return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::config_error, "cannot open config file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_train_config(buf.str());
}

std::string dump_train_config(const TrainConfig& cfg) {
    std::ostringstream out;
    out.precision(17);
    out << "[data]\n"
        << "dim = " << cfg.gen.dim << "\n"
        << "tokens_per_frame = " << cfg.gen.tokens_per_frame << "\n"
        << "classes = " << cfg.gen.class_count << "\n"
        << "images_min = " << cfg.gen.images_min << "\n"
        << "images_max = " << cfg.gen.images_max << "\n"
        << "repeats_min = " << cfg.gen.repeats_min << "\n"
        << "repeats_max = " << cfg.gen.repeats_max << "\n"
        << "salient_per_frame = " << cfg.gen.salient_per_frame << "\n"
        << "evidence_magnitude = " << cfg.gen.evidence_magnitude << "\n"
        << "seed = " << cfg.gen.seed << "\n"
        << "[policy]\n"
        << "hidden = " << cfg.hidden << "\n"
        << "[oracle]\n"
        << "seed = " << cfg.oracle.seed << "\n"
        << "temperature = " << cfg.oracle.temperature << "\n"
        << "empty_ce_offset = " << cfg.oracle.empty_ce_offset << "\n"
        << "[pseudo]\n"
        << "videos = " << cfg.pseudo.videos << "\n"
        << "tau = " << cfg.pseudo.tau << "\n"
        << "[drift]\n"
        << "videos = " << cfg.drift.videos << "\n"
        << "tau = " << cfg.drift.tau << "\n"
        << "gamma = " << cfg.gen.drift_gamma << "\n"
        << "noise = " << cfg.gen.drift_noise << "\n"
        << "evidence_factor = " << cfg.gen.drift_evidence_factor << "\n"
        << "frames_min = " << cfg.gen.drift_frames_min << "\n"
        << "frames_max = " << cfg.gen.drift_frames_max << "\n"
        << "[train]\n"
        << "group_size = " << cfg.group_size << "\n"
        << "learning_rate = " << cfg.learning_rate << "\n"
        << "advantage_epsilon = " << cfg.advantage_epsilon << "\n"
        << "eval_every = " << cfg.eval_every << "\n"
        << "eval_videos = " << cfg.eval_videos << "\n"
        << "[eval]\n"
        << "rho = ";
    for (std::size_t i = 0; i < cfg.rho_grid.size(); ++i) {
        if (i > 0) out << ",";
        out << cfg.rho_grid[i];
    }
    out << "\n";
    return out.str();
}

} // namespace tokengate
