#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ecfc/features.hpp"
#include "ecfc/ingest.hpp"
#include "ecfc/metrics.hpp"
#include "ecfc/model.hpp"
#include "ecfc/optim.hpp"

namespace ecfc {

struct TrainConfig {
    std::size_t batch_size = 10;
    std::size_t epochs = 50;
    double learning_rate = 1e-3;
    double dropout_keep = 1.0;
    std::size_t layer_count = 1;
    std::size_t units = 32;
    FeatureSchema schema = FeatureSchema::windowed(96);
    std::uint64_t seed = 42;
    bool shuffle = false;
    std::optional<double> clip_norm = 5.0;
    SplitSpec split{0, 2400, 2880};
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double zero_floor = kDefaultZeroFloor;

    ModelShape model_shape() const;
    AdamConfig adam() const;
    // Hyperparameter sanity only; the split is checked against a series in fit().
    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_mae = 0.0;  // kWh
    double val_mae = 0.0;    // kWh
    double val_mape = 0.0;   // percent
};

// Everything needed to forecast without retraining.
struct Checkpoint {
    TrainConfig config;
    Normalizer normalizer;
    LstmModel model;
    LstmState state;  // carried state at the end of the epoch (flat mode); zeros otherwise
    std::size_t epoch = 0;
    EpochRecord record;
    std::optional<AdamState> adam;
    Timestamp series_start{};
};

struct EpochTrainResult {
    double train_mae = 0.0;  // kWh
    std::size_t batches = 0;
    LstmState final_state;
};

// One pass over the training targets: per batch forward, MAE, backward, clip, Adam.
// Batches follow chronological order unless config.shuffle is set.
EpochTrainResult train_epoch(LstmModel& model, const FeatureTable& table, IndexRange targets,
                             const TrainConfig& config, AdamState& adam, Rng& rng);

// Maps one example's model input (step_width x steps) to a normalized prediction.
// Any recurrent state lives inside the callable.
using StepPredictor = std::function<double(const Eigen::MatrixXd& input, std::size_t steps)>;

// Wraps a model: flat mode carries `state` from call to call, sequence mode
// starts every example from zeros.
StepPredictor make_predictor(const LstmModel& model, LstmState state);

// Autoregressive pass: predicts targets [start, start + length) one at a time,
// writing each normalized prediction back into the window in place of the
// measurement. Returns normalized predictions.
std::vector<double> feedback_rollout(const StepPredictor& predictor, const FeatureTable& table, std::size_t start,
                                     std::size_t length);
std::vector<double> feedback_rollout(const LstmModel& model, const FeatureTable& table, std::size_t start,
                                     std::size_t length, LstmState state);

struct ValidationResult {
    double mae = 0.0;   // kWh
    double mape = 0.0;  // percent
    std::size_t excluded = 0;
    std::vector<double> predicted;  // kWh
    std::vector<double> actual;     // kWh
};

ValidationResult validate(const StepPredictor& predictor, const MeasurementSeries& series,
                          const FeatureTable& table, IndexRange targets, double zero_floor = kDefaultZeroFloor);
ValidationResult validate(const LstmModel& model, const MeasurementSeries& series, const FeatureTable& table,
                          IndexRange targets, const LstmState& state_in, double zero_floor = kDefaultZeroFloor);

// Convenience overload running validation straight from a checkpoint.
ValidationResult validate(const Checkpoint& checkpoint, const MeasurementSeries& series);

struct FitOptions {
    std::optional<std::string> checkpoint_dir;  // epoch_NNN.ckpt, best.ckpt, final.ckpt
    bool keep_epoch_checkpoints = true;
    std::function<void(const EpochRecord&)> on_epoch;
};

struct FitResult {
    Checkpoint best;
    Checkpoint last;
    std::vector<EpochRecord> history;
};

FitResult fit(const MeasurementSeries& series, const TrainConfig& config, const FitOptions& options = {});

// Index of the best epoch record: lowest validation MAE, earliest on ties.
std::size_t best_epoch_index(const std::vector<EpochRecord>& history);

// `epoch,train_mae_kwh,val_mae_kwh,val_mape_pct`
void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

}  // namespace ecfc
