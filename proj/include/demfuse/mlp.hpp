#pragma once

// Fully connected regression network: tanh hidden layers, identity output,
// z-scored inputs and target. Predicts absolute height error (meters) from
// a pixel's feature vector.

#include "demfuse/features.hpp"
#include "demfuse/grid.hpp"
#include "demfuse/refine.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace demfuse {

struct MlpModel {
    std::vector<int> layer_sizes;            // [inputs, hidden..., 1]
    std::vector<Eigen::MatrixXd> weights;    // layer l: sizes[l+1] x sizes[l]
    std::vector<Eigen::VectorXd> biases;     // layer l: sizes[l+1]
    std::vector<std::string> feature_names;  // one per input, in order
    Eigen::VectorXd input_mean;
    Eigen::VectorXd input_std;
    double target_mean = 0.0;
    double target_std = 1.0;

    int inputs() const { return layer_sizes.front(); }
    std::size_t layers() const { return weights.size(); }
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases,
/// identity scaling. `layer_sizes` must have at least one hidden layer and
/// end in 1.
MlpModel init_model(const std::vector<int>& layer_sizes, std::uint64_t seed);

/// Standardise, propagate, de-standardise, clamp at 0.
double forward(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& features);

/// forward() for every row of `features`.
Eigen::VectorXd predict(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& features);

/// Raw network output in scaled target space (no de-scaling, no clamp), one
/// entry per row.
Eigen::VectorXd predict_scaled(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& features);

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

struct LossAndGradients {
    double sse = 0.0;
    Gradients gradients;
};

/// SSE between network output and z-scored targets, with its gradient with
/// respect to every weight and bias. Rows of `features` are samples in
/// physical units.
LossAndGradients loss_and_gradients(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& features,
                                    const Eigen::Ref<const Eigen::VectorXd>& targets);

/// Scaled-space SSE only.
double sse(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& features,
           const Eigen::Ref<const Eigen::VectorXd>& targets);

struct TrainConfig {
    std::vector<int> hidden = {20};
    double train_fraction = 0.70;
    double validation_fraction = 0.15;
    double test_fraction = 0.15;
    int max_epochs = 2000;
    double learning_rate = 0.01;
    double momentum = 0.9;
    int patience = 50;
    int batch_size = 64;
    std::uint64_t seed = 1;
    std::size_t max_samples = 0;  // random subset before splitting; 0 = all

    /// Throws UsageError on inconsistent settings.
    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_sse = 0.0;       // accumulated over the epoch's mini-batches
    double validation_sse = 0.0;  // after the epoch
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double best_validation_sse = 0.0;
    double train_sse = 0.0;  // of the returned model
    double test_sse = 0.0;
    double test_correlation = 0.0;  // predictions vs targets on the test split; NaN if undefined
    std::size_t train_count = 0;
    std::size_t validation_count = 0;
    std::size_t test_count = 0;
    std::vector<std::string> dropped_features;  // zero variance in the training split
};

struct TrainResult {
    MlpModel model;
    TrainHistory history;
};

/// Mini-batch gradient descent with momentum and early stopping on the
/// validation split; returns the best-validation parameters. Throws
/// DivergenceError on a non-finite loss.
TrainResult train(const TrainingSet& ts, const TrainConfig& config);

/// Predicted absolute error at the table's pixels, nodata elsewhere. Model
/// inputs are matched to table columns by feature name.
Grid predict_error_map(const MlpModel& model, const FeatureTable& table, const GridHeader& geometry);

void save_model(std::ostream& out, const MlpModel& model);
MlpModel load_model(std::istream& in);
void save_model_file(const std::string& path, const MlpModel& model);
MlpModel load_model_file(const std::string& path);

/// CSV: `epoch,train_sse,validation_sse`.
void write_history_csv(std::ostream& out, const TrainHistory& history);

}  // namespace demfuse
