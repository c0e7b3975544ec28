#include "demfuse/mlp.hpp"

#include "demfuse/errors.hpp"
#include "demfuse/metrics.hpp"
#include "demfuse/rng.hpp"
#include "text.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

namespace demfuse {

namespace {

// Samples are columns from here on: X is inputs x m.
Eigen::MatrixXd standardize(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& rows) {
    if (rows.cols() != model.inputs())
        throw UsageError("model expects " + std::to_string(model.inputs()) + " features, got " +
                         std::to_string(rows.cols()));
    return ((rows.transpose().colwise() - model.input_mean).array().colwise() / model.input_std.array()).matrix();
}

Eigen::RowVectorXd forward_scaled(const MlpModel& model, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l + 1 < model.layers(); ++l)
        a = ((model.weights[l] * a).colwise() + model.biases[l]).array().tanh().matrix();
    return ((model.weights.back() * a).colwise() + model.biases.back()).row(0);
}

LossAndGradients scaled_loss_and_gradients(const MlpModel& model, const Eigen::MatrixXd& x,
                                           const Eigen::RowVectorXd& t) {
    const std::size_t L = model.layers();
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(L);
    acts.push_back(x);
    for (std::size_t l = 0; l + 1 < L; ++l)
        acts.push_back(((model.weights[l] * acts.back()).colwise() + model.biases[l]).array().tanh().matrix());
    const Eigen::RowVectorXd out = ((model.weights.back() * acts.back()).colwise() + model.biases.back()).row(0);
    const Eigen::RowVectorXd diff = out - t;

    LossAndGradients res;
    res.sse = diff.squaredNorm();
    res.gradients.weights.resize(L);
    res.gradients.biases.resize(L);

    Eigen::MatrixXd delta = 2.0 * diff;  // 1 x m
    for (std::size_t l = L; l-- > 0;) {
        res.gradients.weights[l] = delta * acts[l].transpose();
        res.gradients.biases[l] = delta.rowwise().sum();
        if (l > 0) {
            const Eigen::MatrixXd back = model.weights[l].transpose() * delta;
            delta = (back.array() * (1.0 - acts[l].array().square())).matrix();
        }
    }
    return res;
}

Eigen::RowVectorXd scale_targets(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& targets) {
    return ((targets.array() - model.target_mean) / model.target_std).matrix().transpose();
}

Eigen::MatrixXd gather_cols(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& idx, std::size_t begin,
                            std::size_t end) {
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(end - begin));
    for (std::size_t i = begin; i < end; ++i) out.col(static_cast<Eigen::Index>(i - begin)) = x.col(idx[i]);
    return out;
}

Eigen::RowVectorXd gather(const Eigen::RowVectorXd& v, const std::vector<Eigen::Index>& idx, std::size_t begin,
                          std::size_t end) {
    Eigen::RowVectorXd out(static_cast<Eigen::Index>(end - begin));
    for (std::size_t i = begin; i < end; ++i) out(static_cast<Eigen::Index>(i - begin)) = v(idx[i]);
    return out;
}

}  // namespace

MlpModel init_model(const std::vector<int>& layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 3) throw UsageError("network needs an input, at least one hidden layer and an output");
    if (layer_sizes.back() != 1) throw UsageError("network output layer must have exactly one unit");
    for (int s : layer_sizes)
        if (s < 1) throw UsageError("layer sizes must be positive");

    MlpModel m;
    m.layer_sizes = layer_sizes;
    SplitMix64 rng(seed);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int fan_in = layer_sizes[l], fan_out = layer_sizes[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-limit, limit);
        m.weights.push_back(std::move(w));
        m.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    for (int i = 0; i < layer_sizes.front(); ++i) m.feature_names.push_back("f" + std::to_string(i));
    m.input_mean = Eigen::VectorXd::Zero(layer_sizes.front());
    m.input_std = Eigen::VectorXd::Ones(layer_sizes.front());
    return m;
}

Eigen::VectorXd predict_scaled(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& features) {
    return forward_scaled(model, standardize(model, features)).transpose();
}

Eigen::VectorXd predict(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& features) {
    const Eigen::VectorXd raw = predict_scaled(model, features);
    return (raw.array() * model.target_std + model.target_mean).max(0.0).matrix();
}

double forward(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& features) {
    if (features.size() != model.inputs())
        throw UsageError("model expects " + std::to_string(model.inputs()) + " features, got " +
                         std::to_string(features.size()));
    const Eigen::MatrixXd row = features.transpose();
    return predict(model, row)(0);
}

LossAndGradients loss_and_gradients(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& features,
                                    const Eigen::Ref<const Eigen::VectorXd>& targets) {
    if (features.rows() == 0) throw UsageError("loss_and_gradients: empty batch");
    if (features.rows() != targets.size()) throw UsageError("loss_and_gradients: features/targets length mismatch");
    return scaled_loss_and_gradients(model, standardize(model, features), scale_targets(model, targets));
}

double sse(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& features,
           const Eigen::Ref<const Eigen::VectorXd>& targets) {
    if (features.rows() != targets.size()) throw UsageError("sse: features/targets length mismatch");
    return (forward_scaled(model, standardize(model, features)) - scale_targets(model, targets)).squaredNorm();
}

void TrainConfig::validate() const {
    if (hidden.empty()) throw UsageError("at least one hidden layer is required");
    for (int h : hidden)
        if (h < 1) throw UsageError("hidden layer widths must be positive");
    if (train_fraction <= 0.0 || validation_fraction <= 0.0 || test_fraction < 0.0)
        throw UsageError("split fractions must be positive");
    if (std::abs(train_fraction + validation_fraction + test_fraction - 1.0) > 1e-9)
        throw UsageError("split fractions must sum to 1");
    if (max_epochs < 1) throw UsageError("max_epochs must be positive");
    if (patience < 1 || patience >= max_epochs) throw UsageError("patience must be in [1, max_epochs)");
    if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw UsageError("momentum must be in [0, 1)");
    if (batch_size < 1) throw UsageError("batch size must be positive");
}

TrainResult train(const TrainingSet& ts, const TrainConfig& config) {
    config.validate();
    if (ts.features.rows() != ts.targets.size()) throw StructuralError("training set features/targets mismatch");
    if (ts.size() < 100)
        throw InsufficientDataError("training needs at least 100 samples, got " + std::to_string(ts.size()));
    if (!ts.features.allFinite() || !ts.targets.allFinite())
        throw UsageError("training set contains non-finite values");

    SplitMix64 rng(config.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(ts.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    rng.shuffle(order);
    if (config.max_samples > 0 && order.size() > config.max_samples) order.resize(config.max_samples);
    if (order.size() < 100) throw InsufficientDataError("training needs at least 100 samples after subsampling");

    const std::size_t m = order.size();
    const auto n_train = static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(m)));
    const auto n_val = static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(m)));
    if (n_train == 0 || n_val == 0 || n_train + n_val > m) throw InsufficientDataError("split leaves an empty subset");
    const std::vector<Eigen::Index> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    const std::vector<Eigen::Index> val_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                                            order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    const std::vector<Eigen::Index> test_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());

    // Scaling from the training split; zero-variance features are dropped.
    const auto n_all = ts.features.cols();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n_all), var = Eigen::VectorXd::Zero(n_all);
    for (auto i : train_idx) mean += ts.features.row(i).transpose();
    mean /= static_cast<double>(n_train);
    for (auto i : train_idx) var += (ts.features.row(i).transpose() - mean).array().square().matrix();
    var /= static_cast<double>(n_train);

    TrainHistory history;
    std::vector<Eigen::Index> kept;
    for (Eigen::Index j = 0; j < n_all; ++j) {
        if (std::sqrt(var(j)) > 1e-12 * std::max(1.0, std::abs(mean(j))))
            kept.push_back(j);
        else
            history.dropped_features.push_back(ts.feature_names[static_cast<std::size_t>(j)]);
    }
    if (kept.empty()) throw InsufficientDataError("every feature has zero variance in the training split");

    std::vector<int> sizes = {static_cast<int>(kept.size())};
    sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
    sizes.push_back(1);
    MlpModel model = init_model(sizes, config.seed);
    model.feature_names.clear();
    model.input_mean.resize(static_cast<Eigen::Index>(kept.size()));
    model.input_std.resize(static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) {
        model.feature_names.push_back(ts.feature_names[static_cast<std::size_t>(kept[k])]);
        model.input_mean(static_cast<Eigen::Index>(k)) = mean(kept[k]);
        model.input_std(static_cast<Eigen::Index>(k)) = std::sqrt(var(kept[k]));
    }
    double tmean = 0.0, tvar = 0.0;
    for (auto i : train_idx) tmean += ts.targets(i);
    tmean /= static_cast<double>(n_train);
    for (auto i : train_idx) tvar += (ts.targets(i) - tmean) * (ts.targets(i) - tmean);
    tvar /= static_cast<double>(n_train);
    model.target_mean = tmean;
    model.target_std = std::sqrt(tvar) > 1e-12 ? std::sqrt(tvar) : 1.0;

    // Scaled design matrices, samples as columns.
    Eigen::MatrixXd kept_features(ts.size(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) kept_features.col(static_cast<Eigen::Index>(k)) = ts.features.col(kept[k]);
    const Eigen::MatrixXd x_all = standardize(model, kept_features);
    const Eigen::RowVectorXd t_all = scale_targets(model, ts.targets);
    const Eigen::MatrixXd x_val = gather_cols(x_all, val_idx, 0, val_idx.size());
    const Eigen::RowVectorXd t_val = gather(t_all, val_idx, 0, val_idx.size());

    Gradients velocity;
    for (std::size_t l = 0; l < model.layers(); ++l) {
        velocity.weights.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
        velocity.biases.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
    }

    MlpModel best = model;
    history.best_validation_sse = std::numeric_limits<double>::infinity();
    std::vector<Eigen::Index> epoch_order = train_idx;
    const auto batch = static_cast<std::size_t>(config.batch_size);
    int since_best = 0;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        rng.shuffle(epoch_order);
        double train_sse = 0.0;
        for (std::size_t b = 0; b < n_train; b += batch) {
            const std::size_t e = std::min(n_train, b + batch);
            const auto step = scaled_loss_and_gradients(model, gather_cols(x_all, epoch_order, b, e),
                                                        gather(t_all, epoch_order, b, e));
            train_sse += step.sse;
            const double scale = config.learning_rate / static_cast<double>(e - b);
            for (std::size_t l = 0; l < model.layers(); ++l) {
                velocity.weights[l] = config.momentum * velocity.weights[l] - scale * step.gradients.weights[l];
                velocity.biases[l] = config.momentum * velocity.biases[l] - scale * step.gradients.biases[l];
                model.weights[l] += velocity.weights[l];
                model.biases[l] += velocity.biases[l];
            }
        }
        const double val_sse = (forward_scaled(model, x_val) - t_val).squaredNorm();
        if (!std::isfinite(train_sse) || !std::isfinite(val_sse))
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
        history.epochs.push_back({epoch, train_sse, val_sse});

        if (val_sse < history.best_validation_sse) {
            history.best_validation_sse = val_sse;
            history.best_epoch = epoch;
            best = model;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }

    const Eigen::MatrixXd x_train = gather_cols(x_all, train_idx, 0, train_idx.size());
    history.train_sse = (forward_scaled(best, x_train) - gather(t_all, train_idx, 0, train_idx.size())).squaredNorm();
    history.train_count = n_train;
    history.validation_count = n_val;
    history.test_count = test_idx.size();
    history.test_correlation = std::numeric_limits<double>::quiet_NaN();
    if (!test_idx.empty()) {
        const Eigen::MatrixXd x_test = gather_cols(x_all, test_idx, 0, test_idx.size());
        const Eigen::RowVectorXd t_test = gather(t_all, test_idx, 0, test_idx.size());
        const Eigen::RowVectorXd out = forward_scaled(best, x_test);
        history.test_sse = (out - t_test).squaredNorm();
        const Eigen::VectorXd pred =
            (out.transpose().array() * best.target_std + best.target_mean).max(0.0).matrix();
        Eigen::VectorXd target(static_cast<Eigen::Index>(test_idx.size()));
        for (std::size_t i = 0; i < test_idx.size(); ++i) target(static_cast<Eigen::Index>(i)) = ts.targets(test_idx[i]);
        try {
            history.test_correlation = pearson_correlation(pred, target);
        } catch (const InsufficientDataError&) {
        }
    }
    return {std::move(best), std::move(history)};
}

Grid predict_error_map(const MlpModel& model, const FeatureTable& table, const GridHeader& geometry) {
    if (table.ncols != 0 && table.ncols != geometry.ncols)
        throw GeometryError("predict_error_map: feature table was built for a different raster width");
    Eigen::MatrixXd x(table.rows(), model.inputs());
    for (int j = 0; j < model.inputs(); ++j) {
        const auto& name = model.feature_names[static_cast<std::size_t>(j)];
        const auto col = table.column(name);
        if (!col) throw UsageError("feature table lacks model input '" + name + "'");
        x.col(j) = table.values.col(*col);
    }
    Grid out(geometry, geometry.nodata);
    if (table.rows() == 0) return out;
    const Eigen::VectorXd pred = predict(model, x);
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
        const std::size_t idx = table.pixel_indices[static_cast<std::size_t>(i)];
        if (idx >= out.size()) throw GeometryError("predict_error_map: pixel index outside the grid");
        out[idx] = pred(i);
    }
    return out;
}

namespace {

constexpr const char* kModelMagic = "demfuse-mlp v1";

void write_numbers(std::ostream& out, const double* data, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) out << (i ? " " : "") << text::significant(data[i], 17);
    out << '\n';
}

std::vector<double> read_numbers(std::istream& in, std::size_t expected, const std::string& what) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("model file truncated: missing " + what);
    const auto toks = text::tokens(line);
    if (toks.size() != expected)
        throw StructuralError("model file: " + what + " has " + std::to_string(toks.size()) + " values, expected " +
                              std::to_string(expected));
    std::vector<double> out;
    out.reserve(expected);
    for (const auto& t : toks) {
        auto v = text::parse_double(t);
        if (!v || !std::isfinite(*v)) throw ParseError("model file: bad number '" + t + "' in " + what);
        out.push_back(*v);
    }
    return out;
}

}  // namespace

void save_model(std::ostream& out, const MlpModel& model) {
    out << kModelMagic << '\n';
    for (std::size_t i = 0; i < model.layer_sizes.size(); ++i) out << (i ? " " : "") << model.layer_sizes[i];
    out << '\n';
    for (std::size_t i = 0; i < model.feature_names.size(); ++i) out << (i ? " " : "") << model.feature_names[i];
    out << '\n';
    write_numbers(out, model.input_mean.data(), model.input_mean.size());
    write_numbers(out, model.input_std.data(), model.input_std.size());
    const double tscale[2] = {model.target_mean, model.target_std};
    write_numbers(out, tscale, 2);
    for (std::size_t l = 0; l < model.layers(); ++l) {
        write_numbers(out, model.biases[l].data(), model.biases[l].size());
        for (Eigen::Index r = 0; r < model.weights[l].rows(); ++r) {
            const Eigen::RowVectorXd row = model.weights[l].row(r);
            write_numbers(out, row.data(), row.size());
        }
    }
}

MlpModel load_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("model file is empty");
    if (text::trim(line) != kModelMagic)
        throw ParseError("model file: unsupported header '" + text::trim(line) + "' (expected '" + kModelMagic + "')");

    MlpModel m;
    if (!std::getline(in, line)) throw ParseError("model file truncated: missing layer sizes");
    for (const auto& t : text::tokens(line)) {
        auto v = text::parse_int(t);
        if (!v || *v < 1 || *v > 1'000'000) throw ParseError("model file: bad layer size '" + t + "'");
        m.layer_sizes.push_back(static_cast<int>(*v));
    }
    if (m.layer_sizes.size() < 3 || m.layer_sizes.back() != 1)
        throw StructuralError("model file: layer sizes must be [inputs, hidden..., 1]");
    const auto n = static_cast<std::size_t>(m.layer_sizes.front());

    if (!std::getline(in, line)) throw ParseError("model file truncated: missing feature names");
    m.feature_names = text::tokens(line);
    if (m.feature_names.size() != n) throw StructuralError("model file: feature name count does not match inputs");

    auto mean = read_numbers(in, n, "input means");
    auto stdv = read_numbers(in, n, "input stds");
    m.input_mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(n));
    m.input_std = Eigen::Map<Eigen::VectorXd>(stdv.data(), static_cast<Eigen::Index>(n));
    if ((m.input_std.array() <= 0.0).any()) throw StructuralError("model file: input stds must be positive");
    auto tscale = read_numbers(in, 2, "target scaling");
    m.target_mean = tscale[0];
    m.target_std = tscale[1];
    if (!(m.target_std > 0.0)) throw StructuralError("model file: target std must be positive");

    for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
        const int rows = m.layer_sizes[l + 1], cols = m.layer_sizes[l];
        auto b = read_numbers(in, static_cast<std::size_t>(rows), "layer " + std::to_string(l) + " biases");
        m.biases.emplace_back(Eigen::Map<Eigen::VectorXd>(b.data(), rows));
        Eigen::MatrixXd w(rows, cols);
        for (int r = 0; r < rows; ++r) {
            auto vals = read_numbers(in, static_cast<std::size_t>(cols),
                                     "layer " + std::to_string(l) + " weight row " + std::to_string(r));
            for (int c = 0; c < cols; ++c) w(r, c) = vals[static_cast<std::size_t>(c)];
        }
        m.weights.push_back(std::move(w));
    }
    while (std::getline(in, line))
        if (!text::trim(line).empty()) throw StructuralError("model file: trailing data after the last layer");
    return m;
}

void save_model_file(const std::string& path, const MlpModel& model) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model file '" + path + "'");
    save_model(out, model);
    if (!out) throw Error("I/O failure writing '" + path + "'");
}

MlpModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model file '" + path + "'");
    return load_model(in);
}

void write_history_csv(std::ostream& out, const TrainHistory& history) {
    out << "epoch,train_sse,validation_sse\n";
    for (const auto& e : history.epochs)
        out << e.epoch << ',' << text::significant(e.train_sse, 9) << ',' << text::significant(e.validation_sse, 9)
            << '\n';
}

}  // namespace demfuse
