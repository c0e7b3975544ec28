#pragma once

// End-to-end compositions shared by the command-line tool and the
// integration tests.

#include "demfuse/features.hpp"
#include "demfuse/fusion.hpp"
#include "demfuse/grid.hpp"
#include "demfuse/mlp.hpp"
#include "demfuse/refine.hpp"

#include <vector>

namespace demfuse {

/// build_training_set() followed by train().
TrainResult train_error_model(const Grid& dem, const Grid& reference, const Grid* aux,
                              const std::vector<FeatureKind>& kinds, const RefineOptions& refine,
                              const TrainConfig& config);

/// Feature kinds a model consumes, recovered from its input names.
std::vector<FeatureKind> model_feature_kinds(const MlpModel& model);

/// Extract the model's features from `dem` and predict its error map.
Grid predict_dem_error(const MlpModel& model, const Grid& dem, const Grid* aux = nullptr);

/// Each DEM's error map is predicted by its own model, converted to weights
/// and used for weighted averaging.
Grid fuse_ann(const Grid& d_a, const Grid& d_b, const MlpModel& model_a, const MlpModel& model_b,
              WeightScheme scheme = WeightScheme::InverseSquare, double floor = kDefaultErrorFloor,
              const Grid* aux_a = nullptr, const Grid* aux_b = nullptr);

}  // namespace demfuse
