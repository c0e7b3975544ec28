#pragma once

#include "demfuse/features.hpp"
#include "demfuse/fusion.hpp"
#include "demfuse/mlp.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace demfuse {

/// Settings shared by the pipeline commands. Read from a `key=value` file
/// (blank lines and `#` comments ignored); command-line flags are applied on
/// top with apply_setting().
///
/// Keys: features, scheme, floor, min_count, hidden, epochs, learning_rate,
/// momentum, patience, batch_size, max_samples, split, seed.
struct PipelineConfig {
    std::vector<FeatureKind> features{kComputedFeatures.begin(), kComputedFeatures.end()};
    WeightScheme scheme = WeightScheme::InverseSquare;
    double error_floor = kDefaultErrorFloor;
    std::optional<std::size_t> min_count;
    TrainConfig train;
};

/// Validates and applies one setting. Unknown keys and bad values throw
/// UsageError.
void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value);

PipelineConfig parse_config(std::istream& in);
PipelineConfig parse_config_file(const std::string& path);

}  // namespace demfuse
