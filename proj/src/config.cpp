#include "demfuse/config.hpp"

#include "demfuse/errors.hpp"
#include "text.hpp"

#include <fstream>
#include <istream>

namespace demfuse {

namespace {

double to_double(std::string_view key, std::string_view value) {
    auto v = text::parse_double(text::trim(value));
    if (!v || !std::isfinite(*v)) throw UsageError("setting '" + std::string(key) + "': not a number: '" + std::string(value) + "'");
    return *v;
}

long long to_int(std::string_view key, std::string_view value, long long min) {
    auto v = text::parse_int(text::trim(value));
    if (!v) throw UsageError("setting '" + std::string(key) + "': not an integer: '" + std::string(value) + "'");
    if (*v < min) throw UsageError("setting '" + std::string(key) + "': must be >= " + std::to_string(min));
    return *v;
}

}  // namespace

void apply_setting(PipelineConfig& config, std::string_view key_in, std::string_view value) {
    const std::string key = text::lower(text::trim(key_in));
    auto& t = config.train;
    if (key == "features") {
        config.features = parse_feature_list(value);
    } else if (key == "scheme") {
        config.scheme = parse_weight_scheme(value);
    } else if (key == "floor") {
        config.error_floor = to_double(key, value);
        if (!(config.error_floor > 0.0)) throw UsageError("setting 'floor': must be positive");
    } else if (key == "min_count") {
        config.min_count = static_cast<std::size_t>(to_int(key, value, 1));
    } else if (key == "hidden") {
        std::vector<int> hidden;
        for (const auto& part : text::split(value, ','))
            hidden.push_back(static_cast<int>(to_int(key, part, 1)));
        t.hidden = hidden;
    } else if (key == "epochs") {
        t.max_epochs = static_cast<int>(to_int(key, value, 1));
    } else if (key == "learning_rate") {
        t.learning_rate = to_double(key, value);
    } else if (key == "momentum") {
        t.momentum = to_double(key, value);
    } else if (key == "patience") {
        t.patience = static_cast<int>(to_int(key, value, 1));
    } else if (key == "batch_size") {
        t.batch_size = static_cast<int>(to_int(key, value, 1));
    } else if (key == "max_samples") {
        t.max_samples = static_cast<std::size_t>(to_int(key, value, 0));
    } else if (key == "split") {
        const auto parts = text::split(value, ',');
        if (parts.size() != 3) throw UsageError("setting 'split': expected train,validation,test fractions");
        t.train_fraction = to_double(key, parts[0]);
        t.validation_fraction = to_double(key, parts[1]);
        t.test_fraction = to_double(key, parts[2]);
    } else if (key == "seed") {
        t.seed = static_cast<std::uint64_t>(to_int(key, value, 0));
    } else {
        throw UsageError("unknown setting '" + std::string(key_in) + "'");
    }
}

PipelineConfig parse_config(std::istream& in) {
    PipelineConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string s = text::trim(line);
        if (s.empty() || s.front() == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
        apply_setting(config, text::trim(std::string_view(s).substr(0, eq)),
                      text::trim(std::string_view(s).substr(eq + 1)));
    }
    config.train.validate();
    return config;
}

PipelineConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    return parse_config(in);
}

}  // namespace demfuse
