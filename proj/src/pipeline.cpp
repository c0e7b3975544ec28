#include "demfuse/pipeline.hpp"

#include "demfuse/errors.hpp"

namespace demfuse {

TrainResult train_error_model(const Grid& dem, const Grid& reference, const Grid* aux,
                              const std::vector<FeatureKind>& kinds, const RefineOptions& refine,
                              const TrainConfig& config) {
    return train(build_training_set(dem, reference, aux, kinds, refine), config);
}

std::vector<FeatureKind> model_feature_kinds(const MlpModel& model) {
    std::vector<FeatureKind> kinds;
    for (const auto& name : model.feature_names) kinds.push_back(parse_feature_kind(name));
    return kinds;
}

Grid predict_dem_error(const MlpModel& model, const Grid& dem, const Grid* aux) {
    const auto kinds = model_feature_kinds(model);
    const bool wants_aux = std::find(kinds.begin(), kinds.end(), FeatureKind::AuxErrorMap) != kinds.end();
    if (wants_aux && !aux) throw UsageError("model uses the 'aux' feature but no aux raster was supplied");
    const FeatureTable table = extract_feature_table(dem, wants_aux ? aux : nullptr, kinds);
    return predict_error_map(model, table, dem.header());
}

Grid fuse_ann(const Grid& d_a, const Grid& d_b, const MlpModel& model_a, const MlpModel& model_b, WeightScheme scheme,
              double floor, const Grid* aux_a, const Grid* aux_b) {
    require_same_geometry(d_a.header(), d_b.header(), "fuse_ann");
    const Grid err_a = predict_dem_error(model_a, d_a, aux_a);
    const Grid err_b = predict_dem_error(model_b, d_b, aux_b);
    return fuse_with_error_maps(d_a, d_b, err_a, err_b, scheme, floor);
}

}  // namespace demfuse
