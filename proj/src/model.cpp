#include "ecfc/model.hpp"

#include <cmath>

#include "ecfc/error.hpp"

namespace ecfc {

namespace {

using Eigen::MatrixXd;

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& z) {
    return (1.0 + (-z.array()).exp()).inverse();
}

// Gate nonlinearities and the cell/hidden update for one timestep.
// z holds the 4u pre-activations stacked i, f, o, c~.
template <typename Z, typename C0, typename G, typename C, typename TC, typename H>
void gate_update(const Eigen::MatrixBase<Z>& z, const Eigen::MatrixBase<C0>& c_prev,
                 Eigen::MatrixBase<G>&& gates, Eigen::MatrixBase<C>&& c, Eigen::MatrixBase<TC>&& tanh_c,
                 Eigen::MatrixBase<H>&& h) {
    const Eigen::Index u = c_prev.rows();
    gates.topRows(3 * u) = sigmoid(z.topRows(3 * u)).matrix();
    gates.bottomRows(u) = z.bottomRows(u).array().tanh().matrix();
    const auto i = gates.topRows(u).array();
    const auto f = gates.middleRows(u, u).array();
    const auto o = gates.middleRows(2 * u, u).array();
    const auto g = gates.bottomRows(u).array();
    c = (f * c_prev.array() + i * g).matrix();
    tanh_c = c.array().tanh().matrix();
    h = (o * tanh_c.array()).matrix();
}

void check_state(const ModelShape& shape, const LstmState& state) {
    if (state.h.size() != shape.layer_count || state.c.size() != shape.layer_count) {
        throw ContractError("state has " + std::to_string(state.h.size()) + " layers, model has " +
                            std::to_string(shape.layer_count));
    }
    const auto batch = static_cast<Eigen::Index>(state.batch());
    if (batch == 0) throw ContractError("state batch is empty");
    for (std::size_t l = 0; l < shape.layer_count; ++l) {
        const auto u = static_cast<Eigen::Index>(shape.units);
        if (state.h[l].rows() != u || state.c[l].rows() != u || state.h[l].cols() != batch ||
            state.c[l].cols() != batch) {
            throw ContractError("state layer " + std::to_string(l) + " has inconsistent dimensions");
        }
    }
}

Eigen::VectorXd run(const LstmModel& model, const MatrixXd& inputs, std::size_t steps, LstmState& state,
                    const DropoutMasks* masks, Tape* tape) {
    const auto& shape = model.shape();
    check_state(shape, state);
    const auto B = static_cast<Eigen::Index>(state.batch());
    const auto T = static_cast<Eigen::Index>(steps);
    const auto u = static_cast<Eigen::Index>(shape.units);
    if (steps == 0) throw ContractError("input has no timesteps");
    if (shape.input_mode == InputMode::Flat && steps != 1) {
        throw ContractError("flat-mode model takes one timestep per example, got " + std::to_string(steps));
    }
    if (inputs.rows() != static_cast<Eigen::Index>(shape.in_dim) || inputs.cols() != T * B) {
        throw ContractError("input is " + std::to_string(inputs.rows()) + "x" + std::to_string(inputs.cols()) +
                            ", model expects " + std::to_string(shape.in_dim) + "x" + std::to_string(T * B));
    }
    const bool dropout = masks != nullptr && shape.layer_count > 1;
    if (dropout && masks->masks.size() != shape.layer_count - 1) {
        throw ContractError("dropout masks do not match the layer count");
    }
    if (tape) {
        tape->steps = steps;
        tape->batch = static_cast<std::size_t>(B);
        tape->layers.assign(shape.layer_count, {});
        tape->dropout = dropout;
        tape->masks = dropout ? *masks : DropoutMasks{};
    }

    MatrixXd layer_input;
    const MatrixXd* x = &inputs;
    for (std::size_t l = 0; l < shape.layer_count; ++l) {
        const auto w = model.layer(l);
        MatrixXd z = w.W * *x;
        z.colwise() += w.b;
        MatrixXd gates(4 * u, T * B), c(u, T * B), tanh_c(u, T * B), h(u, T * B);
        for (Eigen::Index t = 0; t < T; ++t) {
            const auto cols = t * B;
            auto zt = z.middleCols(cols, B);
            if (t == 0) {
                zt.noalias() += w.U * state.h[l];
                gate_update(zt, state.c[l], gates.middleCols(cols, B), c.middleCols(cols, B),
                            tanh_c.middleCols(cols, B), h.middleCols(cols, B));
            } else {
                zt.noalias() += w.U * h.middleCols(cols - B, B);
                gate_update(zt, c.middleCols(cols - B, B), gates.middleCols(cols, B), c.middleCols(cols, B),
                            tanh_c.middleCols(cols, B), h.middleCols(cols, B));
            }
        }
        if (tape) {
            auto& lt = tape->layers[l];
            lt.h0 = state.h[l];
            lt.c0 = state.c[l];
        }
        state.h[l] = h.rightCols(B);
        state.c[l] = c.rightCols(B);

        MatrixXd next;
        if (l + 1 < shape.layer_count) {
            next = dropout ? MatrixXd((h.array() * masks->masks[l].array() / shape.dropout_keep).matrix()) : h;
        }
        if (tape) {
            auto& lt = tape->layers[l];
            lt.x = *x;
            lt.gates = std::move(gates);
            lt.c = std::move(c);
            lt.tanh_c = std::move(tanh_c);
            lt.h = std::move(h);
        }
        layer_input = std::move(next);
        x = &layer_input;
    }
    const auto& params = model.params();
    Eigen::VectorXd predictions = state.h.back().transpose() * params.head_w();
    predictions.array() += params.head_b();
    return predictions;
}

}  // namespace

void ModelShape::validate() const {
    if (layer_count < 1 || units < 1 || in_dim < 1) {
        throw ContractError("model dimensions must be positive (layers=" + std::to_string(layer_count) +
                            ", units=" + std::to_string(units) + ", in_dim=" + std::to_string(in_dim) + ")");
    }
    if (!(dropout_keep > 0.0 && dropout_keep <= 1.0)) {
        throw ContractError("dropout keep probability must lie in (0, 1]");
    }
}

std::vector<TensorSpec> parameter_layout(const ModelShape& shape) {
    std::vector<TensorSpec> layout;
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
        layout.push_back({std::move(name), rows, cols, offset});
        offset += rows * cols;
    };
    for (std::size_t l = 0; l < shape.layer_count; ++l) {
        const auto prefix = "layer" + std::to_string(l);
        add(prefix + ".W", 4 * shape.units, shape.layer_input(l));
        add(prefix + ".U", 4 * shape.units, shape.units);
        add(prefix + ".b", 4 * shape.units, 1);
    }
    add("head.w", shape.units, 1);
    add("head.b", 1, 1);
    return layout;
}

ParameterSet::ParameterSet(const ModelShape& shape) : layout_(parameter_layout(shape)) {
    values_.assign(layout_.back().offset + layout_.back().size(), 0.0);
}

void ParameterSet::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

ParameterSet& ParameterSet::operator+=(const ParameterSet& other) {
    if (other.values_.size() != values_.size()) throw ContractError("parameter sets differ in size");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
    return *this;
}

MatrixMap ParameterSet::matrix(std::size_t i) {
    const auto& s = layout_.at(i);
    return {values_.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols)};
}

ConstMatrixMap ParameterSet::matrix(std::size_t i) const {
    const auto& s = layout_.at(i);
    return {values_.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols)};
}

VectorMap ParameterSet::vector(std::size_t i) {
    const auto& s = layout_.at(i);
    return {values_.data() + s.offset, static_cast<Eigen::Index>(s.size())};
}

ConstVectorMap ParameterSet::vector(std::size_t i) const {
    const auto& s = layout_.at(i);
    return {values_.data() + s.offset, static_cast<Eigen::Index>(s.size())};
}

LstmModel::LstmModel(const ModelShape& shape) : shape_(shape) {
    shape_.validate();
    params_ = ParameterSet(shape_);
}

LayerWeights LstmModel::layer(std::size_t l) const {
    if (l >= shape_.layer_count) throw ContractError("layer index out of range");
    return {params_.W(l), params_.U(l), params_.b(l)};
}

LstmModel init_model(const ModelShape& shape, std::uint64_t seed) {
    LstmModel model(shape);
    Rng rng(seed);
    auto fill_uniform = [&rng](auto&& m, double fan_in, double fan_out) {
        const double s = std::sqrt(6.0 / (fan_in + fan_out));
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = s * (2.0 * uniform01(rng) - 1.0);
    };
    const auto u = static_cast<double>(shape.units);
    auto& p = model.params();
    for (std::size_t l = 0; l < shape.layer_count; ++l) {
        fill_uniform(p.W(l), static_cast<double>(shape.layer_input(l)), u);
        fill_uniform(p.U(l), u, u);
        p.b(l).setZero();
        p.b(l).segment(static_cast<Eigen::Index>(shape.units), static_cast<Eigen::Index>(shape.units)).setOnes();
    }
    fill_uniform(p.head_w(), u, 1.0);
    p.head_b() = 0.0;
    return model;
}

LstmState zero_state(const ModelShape& shape, std::size_t batch) {
    LstmState state;
    const auto u = static_cast<Eigen::Index>(shape.units);
    const auto b = static_cast<Eigen::Index>(batch);
    state.h.assign(shape.layer_count, MatrixXd::Zero(u, b));
    state.c.assign(shape.layer_count, MatrixXd::Zero(u, b));
    return state;
}

CellStep cell_step(const LayerWeights& layer, const MatrixXd& x, const MatrixXd& h_prev, const MatrixXd& c_prev) {
    const auto u = layer.U.cols();
    if (x.rows() != layer.W.cols() || h_prev.rows() != u || c_prev.rows() != u || x.cols() != h_prev.cols() ||
        x.cols() != c_prev.cols()) {
        throw ContractError("cell_step dimension mismatch");
    }
    const auto B = x.cols();
    MatrixXd z = layer.W * x + layer.U * h_prev;
    z.colwise() += layer.b;
    MatrixXd gates(4 * u, B);
    CellStep out{MatrixXd(u, B), MatrixXd(u, B), {}};
    MatrixXd tanh_c(u, B);
    gate_update(z, c_prev, gates.leftCols(B), out.c.leftCols(B), tanh_c.leftCols(B), out.h.leftCols(B));
    out.cache.input_gate = gates.topRows(u);
    out.cache.forget_gate = gates.middleRows(u, u);
    out.cache.output_gate = gates.middleRows(2 * u, u);
    out.cache.candidate = gates.bottomRows(u);
    out.cache.tanh_cell = std::move(tanh_c);
    return out;
}

DropoutMasks sample_dropout_masks(const ModelShape& shape, std::size_t steps, std::size_t batch, Rng& rng) {
    DropoutMasks out;
    if (shape.layer_count < 2) return out;
    const auto u = static_cast<Eigen::Index>(shape.units);
    const auto cols = static_cast<Eigen::Index>(steps * batch);
    out.masks.assign(shape.layer_count - 1, MatrixXd(u, cols));
    for (auto& m : out.masks) {
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < u; ++i) m(i, j) = uniform01(rng) < shape.dropout_keep ? 1.0 : 0.0;
    }
    return out;
}

ForwardResult forward(const LstmModel& model, const MatrixXd& inputs, std::size_t steps, const LstmState& state_in,
                      const DropoutMasks* masks) {
    ForwardResult out;
    out.state = state_in;
    out.predictions = run(model, inputs, steps, out.state, masks, &out.tape);
    return out;
}

Eigen::VectorXd infer(const LstmModel& model, const MatrixXd& inputs, std::size_t steps, LstmState& state) {
    return run(model, inputs, steps, state, nullptr, nullptr);
}

Gradients backward(const LstmModel& model, const Tape& tape, const Eigen::VectorXd& dloss) {
    Gradients grads(model.shape());
    backward_accumulate(model, tape, dloss, grads);
    return grads;
}

void backward_accumulate(const LstmModel& model, const Tape& tape, const Eigen::VectorXd& dloss, Gradients& into) {
    const auto& shape = model.shape();
    if (tape.layers.size() != shape.layer_count || into.size() != model.params().size()) {
        throw ContractError("tape or gradient buffer does not match the model");
    }
    const auto B = static_cast<Eigen::Index>(tape.batch);
    const auto T = static_cast<Eigen::Index>(tape.steps);
    const auto u = static_cast<Eigen::Index>(shape.units);
    if (dloss.size() != B) throw ContractError("loss gradient has the wrong batch size");
    for (std::size_t l = 0; l < shape.layer_count; ++l) {
        const auto& lt = tape.layers[l];
        if (lt.h.rows() != u || lt.h.cols() != T * B ||
            lt.x.rows() != static_cast<Eigen::Index>(shape.layer_input(l))) {
            throw ContractError("tape layer " + std::to_string(l) + " does not match the model");
        }
    }

    const auto& top = tape.layers.back();
    into.head_w().noalias() += top.h.rightCols(B) * dloss;
    into.head_b() += dloss.sum();

    MatrixXd dh_above = MatrixXd::Zero(u, T * B);
    dh_above.rightCols(B).noalias() = model.params().head_w() * dloss.transpose();

    for (std::size_t l = shape.layer_count; l-- > 0;) {
        const auto& lt = tape.layers[l];
        const auto w = model.layer(l);
        MatrixXd dz(4 * u, T * B);
        MatrixXd dh_next = MatrixXd::Zero(u, B);
        MatrixXd dc_next = MatrixXd::Zero(u, B);
        for (Eigen::Index t = T; t-- > 0;) {
            const auto cols = t * B;
            const auto g = lt.gates.middleCols(cols, B);
            const auto i = g.topRows(u).array();
            const auto f = g.middleRows(u, u).array();
            const auto o = g.middleRows(2 * u, u).array();
            const auto cand = g.bottomRows(u).array();
            const auto tc = lt.tanh_c.middleCols(cols, B).array();
            const auto c_prev = t > 0 ? lt.c.middleCols(cols - B, B).array() : lt.c0.leftCols(B).array();

            const Eigen::ArrayXXd dh = dh_above.middleCols(cols, B).array() + dh_next.array();
            const Eigen::ArrayXXd dc = dh * o * (1.0 - tc * tc) + dc_next.array();
            auto dzt = dz.middleCols(cols, B);
            dzt.topRows(u) = (dc * cand * i * (1.0 - i)).matrix();
            dzt.middleRows(u, u) = (dc * c_prev * f * (1.0 - f)).matrix();
            dzt.middleRows(2 * u, u) = (dh * tc * o * (1.0 - o)).matrix();
            dzt.bottomRows(u) = (dc * i * (1.0 - cand * cand)).matrix();
            dc_next = (dc * f).matrix();
            if (t > 0) dh_next.noalias() = w.U.transpose() * dzt;
        }

        into.W(l).noalias() += dz * lt.x.transpose();
        into.U(l).noalias() += dz.leftCols(B) * lt.h0.transpose();
        if (T > 1) into.U(l).noalias() += dz.rightCols((T - 1) * B) * lt.h.leftCols((T - 1) * B).transpose();
        into.b(l) += dz.rowwise().sum();

        if (l > 0) {
            dh_above.noalias() = w.W.transpose() * dz;
            if (tape.dropout) dh_above.array() *= tape.masks.masks[l - 1].array() / shape.dropout_keep;
        }
    }
}

}  // namespace ecfc
