#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ecfc/features.hpp"

namespace ecfc {

using Rng = std::mt19937_64;

// Uniform draw in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct ModelShape {
    std::size_t layer_count = 1;
    std::size_t units = 32;
    std::size_t in_dim = 7;
    double dropout_keep = 1.0;
    InputMode input_mode = InputMode::Flat;

    std::size_t layer_input(std::size_t layer) const { return layer == 0 ? in_dim : units; }
    void validate() const;
};

struct TensorSpec {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;  // in elements, into the flat parameter buffer

    std::size_t size() const { return rows * cols; }
};

// Parameter tensors of every layer, in buffer order:
//   layer{l}.W  (4*units x layer_input)   gate blocks stacked i, f, o, c~
//   layer{l}.U  (4*units x units)
//   layer{l}.b  (4*units x 1)
//   head.w      (units x 1)
//   head.b      (1 x 1)
std::vector<TensorSpec> parameter_layout(const ModelShape& shape);

using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

// Read-only view of one layer's weights.
struct LayerWeights {
    ConstMatrixMap W;
    ConstMatrixMap U;
    ConstVectorMap b;

    std::size_t units() const { return static_cast<std::size_t>(U.cols()); }
};

// Flat buffer of every learnable value plus typed views into it. Used for the
// model weights and, with the same layout, for gradients and Adam moments.
class ParameterSet {
public:
    ParameterSet() = default;
    explicit ParameterSet(const ModelShape& shape);

    std::size_t size() const { return values_.size(); }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    const std::vector<TensorSpec>& layout() const { return layout_; }
    std::size_t layer_count() const { return (layout_.size() - 2) / 3; }

    MatrixMap W(std::size_t layer) { return matrix(3 * layer); }
    MatrixMap U(std::size_t layer) { return matrix(3 * layer + 1); }
    VectorMap b(std::size_t layer) { return vector(3 * layer + 2); }
    VectorMap head_w() { return vector(layout_.size() - 2); }
    double& head_b() { return values_[layout_.back().offset]; }

    ConstMatrixMap W(std::size_t layer) const { return matrix(3 * layer); }
    ConstMatrixMap U(std::size_t layer) const { return matrix(3 * layer + 1); }
    ConstVectorMap b(std::size_t layer) const { return vector(3 * layer + 2); }
    ConstVectorMap head_w() const { return vector(layout_.size() - 2); }
    double head_b() const { return values_[layout_.back().offset]; }

    void set_zero();
    ParameterSet& operator+=(const ParameterSet& other);

private:
    MatrixMap matrix(std::size_t i);
    ConstMatrixMap matrix(std::size_t i) const;
    VectorMap vector(std::size_t i);
    ConstVectorMap vector(std::size_t i) const;

    std::vector<TensorSpec> layout_;
    std::vector<double> values_;
};

using Gradients = ParameterSet;

// Stacked LSTM with a linear head on the top layer's final hidden state.
class LstmModel {
public:
    LstmModel() = default;
    explicit LstmModel(const ModelShape& shape);

    const ModelShape& shape() const { return shape_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }
    LayerWeights layer(std::size_t l) const;

private:
    ModelShape shape_;
    ParameterSet params_;
};

// Glorot-uniform weights, zero biases except the forget gate (1.0), zero head bias.
LstmModel init_model(const ModelShape& shape, std::uint64_t seed);

// Per-layer hidden and cell states; one column per batch entry.
struct LstmState {
    std::vector<Eigen::MatrixXd> h;
    std::vector<Eigen::MatrixXd> c;

    std::size_t batch() const { return h.empty() ? 0 : static_cast<std::size_t>(h.front().cols()); }
};

LstmState zero_state(const ModelShape& shape, std::size_t batch = 1);

// Gate activations of one cell update, enough to run the step backwards.
struct CellCache {
    Eigen::MatrixXd input_gate;
    Eigen::MatrixXd forget_gate;
    Eigen::MatrixXd output_gate;
    Eigen::MatrixXd candidate;
    Eigen::MatrixXd tanh_cell;
};

struct CellStep {
    Eigen::MatrixXd h;
    Eigen::MatrixXd c;
    CellCache cache;
};

// One LSTM update for a batch of column vectors.
CellStep cell_step(const LayerWeights& layer, const Eigen::MatrixXd& x, const Eigen::MatrixXd& h_prev,
                   const Eigen::MatrixXd& c_prev);

// Bernoulli(keep) masks for the hidden sequences passed between layers:
// masks[l] sits between layer l and l + 1 and is (units x steps*batch) of 0/1.
struct DropoutMasks {
    std::vector<Eigen::MatrixXd> masks;
};

DropoutMasks sample_dropout_masks(const ModelShape& shape, std::size_t steps, std::size_t batch, Rng& rng);

struct LayerTape {
    Eigen::MatrixXd x;      // layer input, in x steps*batch (after dropout)
    Eigen::MatrixXd gates;  // 4u x steps*batch activations, blocks i, f, o, c~
    Eigen::MatrixXd c;      // u x steps*batch
    Eigen::MatrixXd tanh_c;
    Eigen::MatrixXd h;
    Eigen::MatrixXd h0;
    Eigen::MatrixXd c0;
};

struct Tape {
    std::size_t steps = 0;
    std::size_t batch = 0;
    std::vector<LayerTape> layers;
    DropoutMasks masks;
    bool dropout = false;
};

struct ForwardResult {
    Eigen::VectorXd predictions;  // one normalized value per batch column
    LstmState state;
    Tape tape;
};

// Inputs are laid out time-major: column t * batch + b is timestep t of
// example b. The batch size is taken from state_in. Flat-mode models accept
// exactly one timestep. Passing masks turns on training-time dropout.
ForwardResult forward(const LstmModel& model, const Eigen::MatrixXd& inputs, std::size_t steps,
                      const LstmState& state_in, const DropoutMasks* masks = nullptr);

// Same computation as forward() without recording a tape and without dropout.
Eigen::VectorXd infer(const LstmModel& model, const Eigen::MatrixXd& inputs, std::size_t steps,
                      LstmState& state);

// Exact BPTT gradients of sum_b dloss[b] * prediction[b]. The incoming
// state is treated as a constant.
Gradients backward(const LstmModel& model, const Tape& tape, const Eigen::VectorXd& dloss);
void backward_accumulate(const LstmModel& model, const Tape& tape, const Eigen::VectorXd& dloss,
                         Gradients& into);

}  // namespace ecfc
