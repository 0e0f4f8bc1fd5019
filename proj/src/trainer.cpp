#include "ecfc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <ostream>

#include "ecfc/checkpoint.hpp"
#include "ecfc/error.hpp"
#include "ecfc/format.hpp"

namespace ecfc {

namespace {

bool carries_state(const FeatureSchema& schema) { return schema.mode == InputMode::Flat; }

void fill_inputs(const FeatureTable& table, std::span<const std::size_t> indices, std::span<const double> channel,
                 Eigen::MatrixXd& x) {
    const auto& schema = table.schema();
    const std::size_t steps = schema.steps();
    const std::size_t batch = indices.size();
    x.resize(static_cast<Eigen::Index>(schema.step_width()), static_cast<Eigen::Index>(steps * batch));
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t t = 0; t < steps; ++t) {
            table.write_step(indices[b], t, channel, x.col(static_cast<Eigen::Index>(t * batch + b)).data());
        }
    }
}

std::string epoch_file(std::size_t epoch) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch_%03zu.ckpt", epoch);
    return buf;
}

}  // namespace

ModelShape TrainConfig::model_shape() const {
    return {layer_count, units, schema.step_width(), dropout_keep, schema.mode};
}

AdamConfig TrainConfig::adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_epsilon}; }

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be >= 0");
    if (!(dropout_keep > 0.0 && dropout_keep <= 1.0)) throw ConfigError("dropout_keep must lie in (0, 1]");
    if (layer_count < 1 || units < 1) throw ConfigError("layer_count and units must be at least 1");
    if (schema.kind == SchemaKind::Windowed && schema.window < 1) {
        throw ConfigError("window_size must be at least 1 for the windowed schema");
    }
    if (clip_norm && !(*clip_norm > 0.0)) throw ConfigError("clip_norm must be positive (or null to disable)");
    if (shuffle && schema.mode == InputMode::Flat) {
        throw ConfigError("shuffle breaks the carried state of flat input mode");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (!(adam_epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
    if (!(zero_floor >= 0.0)) throw ConfigError("zero_floor must be nonnegative");
}

EpochTrainResult train_epoch(LstmModel& model, const FeatureTable& table, IndexRange targets,
                             const TrainConfig& config, AdamState& adam, Rng& rng) {
    const std::size_t count = targets.size();
    if (count == 0) throw ContractError("training set is empty");
    const auto& shape = model.shape();
    const auto& schema = table.schema();
    if (shape.in_dim != schema.step_width() || shape.input_mode != schema.mode) {
        throw ContractError("model input does not match the feature schema");
    }

    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), targets.begin);
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);

    const bool carry = carries_state(schema);
    const bool dropout = shape.dropout_keep < 1.0 && shape.layer_count > 1;
    const auto& channel = table.channel();

    EpochTrainResult result;
    result.final_state = zero_state(shape, 1);
    Gradients grads(shape);
    Eigen::MatrixXd x;
    std::vector<double> batch_targets;
    double loss_sum = 0.0;

    for (std::size_t first = 0; first < count; first += config.batch_size) {
        const std::size_t size = std::min(config.batch_size, count - first);
        const std::span<const std::size_t> indices(order.data() + first, size);
        batch_targets.clear();
        for (auto k : indices) batch_targets.push_back(channel[k]);
        grads.set_zero();

        if (carry) {
            // Examples run one after another with the state handed forward;
            // gradients stop at each example boundary.
            std::vector<Tape> tapes;
            std::vector<double> predictions;
            tapes.reserve(size);
            for (std::size_t b = 0; b < size; ++b) {
                fill_inputs(table, indices.subspan(b, 1), channel, x);
                DropoutMasks masks;
                if (dropout) masks = sample_dropout_masks(shape, 1, 1, rng);
                auto out = forward(model, x, 1, result.final_state, dropout ? &masks : nullptr);
                predictions.push_back(out.predictions[0]);
                tapes.push_back(std::move(out.tape));
                result.final_state = std::move(out.state);
            }
            const auto loss = mae_loss(predictions, batch_targets);
            for (std::size_t b = 0; b < size; ++b) {
                backward_accumulate(model, tapes[b], Eigen::VectorXd::Constant(1, loss.grad[b]), grads);
            }
            loss_sum += loss.loss;
        } else {
            fill_inputs(table, indices, channel, x);
            DropoutMasks masks;
            if (dropout) masks = sample_dropout_masks(shape, schema.steps(), size, rng);
            auto out = forward(model, x, schema.steps(), zero_state(shape, size), dropout ? &masks : nullptr);
            const std::vector<double> predictions(out.predictions.data(), out.predictions.data() + size);
            const auto loss = mae_loss(predictions, batch_targets);
            backward_accumulate(model, out.tape, Eigen::Map<const Eigen::VectorXd>(loss.grad.data(), size), grads);
            loss_sum += loss.loss;
        }

        if (config.clip_norm) clip_gradients(grads.values(), *config.clip_norm);
        adam_step(model.params().values(), grads.values(), adam);
        ++result.batches;
    }
    result.train_mae = loss_sum / static_cast<double>(result.batches) * table.normalizer().target.range();
    return result;
}

StepPredictor make_predictor(const LstmModel& model, LstmState state) {
    if (model.shape().input_mode == InputMode::Flat) {
        if (state.batch() != 1) throw ContractError("carried state must have batch size 1");
        return [&model, state = std::move(state)](const Eigen::MatrixXd& x, std::size_t steps) mutable {
            return infer(model, x, steps, state)[0];
        };
    }
    return [&model](const Eigen::MatrixXd& x, std::size_t steps) {
        auto fresh = zero_state(model.shape(), 1);
        return infer(model, x, steps, fresh)[0];
    };
}

std::vector<double> feedback_rollout(const StepPredictor& predictor, const FeatureTable& table, std::size_t start,
                                     std::size_t length) {
    const auto& schema = table.schema();
    const std::size_t n = schema.history();
    if (start < n) {
        throw BoundsError("forecast start " + std::to_string(start) + " needs " + std::to_string(n) +
                          " half hours of measured history");
    }
    if (start > table.channel().size()) {
        throw BoundsError("forecast start " + std::to_string(start) + " lies past the measured series");
    }
    if (start + length > table.extent()) {
        throw BoundsError("calendar features cover " + std::to_string(table.extent()) + " half hours, rollout needs " +
                          std::to_string(start + length));
    }
    std::vector<double> working(table.channel().begin(), table.channel().begin() + static_cast<long>(start));
    working.reserve(start + length);
    std::vector<double> out;
    out.reserve(length);
    Eigen::MatrixXd x;
    for (std::size_t j = 0; j < length; ++j) {
        const std::size_t index = start + j;
        fill_inputs(table, std::span<const std::size_t>(&index, 1), working, x);
        const double prediction = predictor(x, schema.steps());
        working.push_back(prediction);
        out.push_back(prediction);
    }
    return out;
}

std::vector<double> feedback_rollout(const LstmModel& model, const FeatureTable& table, std::size_t start,
                                     std::size_t length, LstmState state) {
    if (model.shape().input_mode != table.schema().mode || model.shape().in_dim != table.schema().step_width()) {
        throw ContractError("model input does not match the feature schema");
    }
    return feedback_rollout(make_predictor(model, std::move(state)), table, start, length);
}

ValidationResult validate(const StepPredictor& predictor, const MeasurementSeries& series, const FeatureTable& table,
                          IndexRange targets, double zero_floor) {
    if (targets.size() == 0) throw ContractError("validation range is empty");
    if (targets.end > series.size()) {
        throw BoundsError("validation range ends at " + std::to_string(targets.end) + ", series has " +
                          std::to_string(series.size()) + " points");
    }
    const auto normalized = feedback_rollout(predictor, table, targets.begin, targets.size());
    ValidationResult result;
    const auto& scale = table.normalizer().target;
    for (std::size_t j = 0; j < normalized.size(); ++j) {
        result.predicted.push_back(scale.denormalize(normalized[j]));
        result.actual.push_back(series.values[targets.begin + j]);
    }
    result.mae = mae(result.actual, result.predicted);
    const auto p = mape(result.actual, result.predicted, zero_floor);
    result.mape = p.percent;
    result.excluded = p.excluded;
    return result;
}

ValidationResult validate(const LstmModel& model, const MeasurementSeries& series, const FeatureTable& table,
                          IndexRange targets, const LstmState& state_in, double zero_floor) {
    if (model.shape().input_mode != table.schema().mode || model.shape().in_dim != table.schema().step_width()) {
        throw ContractError("model input does not match the feature schema");
    }
    return validate(make_predictor(model, state_in), series, table, targets, zero_floor);
}

ValidationResult validate(const Checkpoint& checkpoint, const MeasurementSeries& series) {
    if (series.size() > 0 && series.start != checkpoint.series_start) {
        throw DataError("series starts at " + format_timestamp(series.start) + " but the model was trained on one "
                        "starting at " + format_timestamp(checkpoint.series_start));
    }
    const auto& cfg = checkpoint.config;
    FeatureTable table(series, cfg.schema, checkpoint.normalizer);
    return validate(checkpoint.model, series, table, validation_targets(cfg.split), checkpoint.state, cfg.zero_floor);
}

std::size_t best_epoch_index(const std::vector<EpochRecord>& history) {
    if (history.empty()) throw ContractError("no epochs recorded");
    std::size_t best = 0;
    for (std::size_t k = 1; k < history.size(); ++k) {
        if (history[k].val_mae < history[best].val_mae) best = k;
    }
    return best;
}

FitResult fit(const MeasurementSeries& series, const TrainConfig& config, const FitOptions& options) {
    config.validate();
    const auto& split = config.split;
    const auto& schema = config.schema;
    if (split.val_end > series.size()) {
        throw ConfigError("split needs " + std::to_string(split.val_end) + " points but the series has " +
                          std::to_string(series.size()) + " (short by " +
                          std::to_string(split.val_end - series.size()) + ")");
    }
    if (split.train_len <= schema.history()) {
        throw ConfigError("training length " + std::to_string(split.train_len) + " leaves no examples for window " +
                          std::to_string(schema.history()) + " (needs at least " +
                          std::to_string(schema.history() + 1) + ")");
    }
    if (split.val_end <= split.train_end()) {
        throw ConfigError("validation range [" + std::to_string(split.train_end()) + ", " +
                          std::to_string(split.val_end) + ") is empty; fit needs it to select the best epoch");
    }

    const auto normalizer = fit_normalizer(series, schema, split);
    const FeatureTable table(series, schema, normalizer);
    const auto shape = config.model_shape();
    LstmModel model = init_model(shape, config.seed);
    AdamState adam(config.adam(), model.params().size());
    Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    namespace fs = std::filesystem;
    if (options.checkpoint_dir) fs::create_directories(*options.checkpoint_dir);
    const auto path_of = [&](const std::string& name) { return (fs::path(*options.checkpoint_dir) / name).string(); };

    FitResult result;
    double best_mae = 0.0;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        auto trained = train_epoch(model, table, train_targets(split, schema), config, adam, rng);
        LstmState state = schema.mode == InputMode::Flat ? std::move(trained.final_state) : zero_state(shape, 1);
        const auto val = validate(model, series, table, validation_targets(split), state, config.zero_floor);

        EpochRecord record{epoch, trained.train_mae, val.mae, val.mape};
        result.history.push_back(record);
        if (options.on_epoch) options.on_epoch(record);

        result.last = Checkpoint{config, normalizer, model, std::move(state), epoch, record, adam, series.start};
        if (options.checkpoint_dir && options.keep_epoch_checkpoints) {
            save_checkpoint(result.last, path_of(epoch_file(epoch)));
        }
        if (epoch == 1 || record.val_mae < best_mae) {
            best_mae = record.val_mae;
            result.best = result.last;
            if (options.checkpoint_dir) save_checkpoint(result.best, path_of("best.ckpt"));
        }
    }
    if (options.checkpoint_dir) save_checkpoint(result.last, path_of("final.ckpt"));
    return result;
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
    std::string text = "epoch,train_mae_kwh,val_mae_kwh,val_mape_pct\n";
    for (const auto& r : history) {
        text += std::to_string(r.epoch) + ',' + format_double(r.train_mae) + ',' + format_double(r.val_mae) + ',' +
                format_double(r.val_mape) + '\n';
    }
    out << text;
}

}  // namespace ecfc
