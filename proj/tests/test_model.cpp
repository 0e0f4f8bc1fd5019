#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ecfc/error.hpp"
#include "ecfc/model.hpp"

using namespace ecfc;
using Eigen::MatrixXd;

namespace {

double sigm(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Straight-line evaluation of the five cell equations, one scalar at a time.
void reference_cell(const LayerWeights& w, const std::vector<double>& x, std::vector<double>& h,
                    std::vector<double>& c) {
    const std::size_t u = w.units();
    std::vector<double> h_new(u), c_new(u);
    for (std::size_t k = 0; k < u; ++k) {
        double pre[4];
        for (std::size_t g = 0; g < 4; ++g) {
            const auto row = static_cast<Eigen::Index>(g * u + k);
            double z = w.b(row);
            for (std::size_t j = 0; j < x.size(); ++j) z += w.W(row, static_cast<Eigen::Index>(j)) * x[j];
            for (std::size_t j = 0; j < u; ++j) z += w.U(row, static_cast<Eigen::Index>(j)) * h[j];
            pre[g] = z;
        }
        const double i = sigm(pre[0]), f = sigm(pre[1]), o = sigm(pre[2]), g = std::tanh(pre[3]);
        c_new[k] = f * c[k] + i * g;
        h_new[k] = o * std::tanh(c_new[k]);
    }
    h = h_new;
    c = c_new;
}

LstmModel random_model(const ModelShape& shape, std::uint64_t seed, double scale = 0.5) {
    LstmModel m(shape);
    Rng rng(seed);
    for (auto& v : m.params().values()) v = scale * (2.0 * uniform01(rng) - 1.0);
    return m;
}

MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = 2.0 * uniform01(rng) - 1.0;
    return m;
}

LstmState random_state(const ModelShape& shape, std::size_t batch, Rng& rng) {
    auto s = zero_state(shape, batch);
    for (auto& h : s.h) h = random_matrix(h.rows(), h.cols(), rng) * 0.5;
    for (auto& c : s.c) c = random_matrix(c.rows(), c.cols(), rng);
    return s;
}

double weighted_output(const LstmModel& m, const MatrixXd& x, std::size_t steps, const LstmState& s,
                       const DropoutMasks* masks, const Eigen::VectorXd& weights) {
    return forward(m, x, steps, s, masks).predictions.dot(weights);
}

// Largest relative error between analytic and central-difference gradients.
double gradient_check(LstmModel& model, const MatrixXd& x, std::size_t steps, const LstmState& s,
                      const DropoutMasks* masks, const Eigen::VectorXd& weights) {
    const auto out = forward(model, x, steps, s, masks);
    const auto grads = backward(model, out.tape, weights);
    constexpr double eps = 1e-5;
    double worst = 0.0;
    auto params = model.params().values();
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double keep = params[k];
        params[k] = keep + eps;
        const double up = weighted_output(model, x, steps, s, masks, weights);
        params[k] = keep - eps;
        const double down = weighted_output(model, x, steps, s, masks, weights);
        params[k] = keep;
        const double numeric = (up - down) / (2.0 * eps);
        const double analytic = grads.values()[k];
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
        worst = std::max(worst, std::abs(numeric - analytic) / scale);
    }
    return worst;
}

}  // namespace

TEST(Layout, TensorOrderAndSizes) {
    const ModelShape shape{2, 3, 5, 1.0, InputMode::Sequence};
    const auto layout = parameter_layout(shape);
    ASSERT_EQ(layout.size(), 8u);
    EXPECT_EQ(layout[0].name, "layer0.W");
    EXPECT_EQ(layout[0].rows, 12u);
    EXPECT_EQ(layout[0].cols, 5u);
    EXPECT_EQ(layout[3].name, "layer1.W");
    EXPECT_EQ(layout[3].cols, 3u);
    EXPECT_EQ(layout[6].name, "head.w");
    EXPECT_EQ(layout[7].offset + 1, ParameterSet(shape).size());
}

TEST(Init, DeterministicBySeed) {
    const ModelShape shape{2, 8, 7};
    const auto a = init_model(shape, 5);
    const auto b = init_model(shape, 5);
    const auto c = init_model(shape, 6);
    EXPECT_TRUE(std::equal(a.params().values().begin(), a.params().values().end(), b.params().values().begin()));
    EXPECT_FALSE(std::equal(a.params().values().begin(), a.params().values().end(), c.params().values().begin()));
}

TEST(Init, BiasesAndGlorotBounds) {
    const ModelShape shape{3, 16, 10};
    const auto m = init_model(shape, 1);
    for (std::size_t l = 0; l < 3; ++l) {
        const auto w = m.layer(l);
        EXPECT_EQ(w.W.cols(), l == 0 ? 10 : 16);
        EXPECT_TRUE((w.b.segment(16, 16).array() == 1.0).all());
        EXPECT_TRUE((w.b.head(16).array() == 0.0).all());
        EXPECT_TRUE((w.b.tail(32).array() == 0.0).all());
        const double s = std::sqrt(6.0 / (static_cast<double>(w.W.cols()) + 16.0));
        EXPECT_LE(w.W.cwiseAbs().maxCoeff(), s);
        EXPECT_LE(w.U.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 32.0));
    }
    EXPECT_EQ(m.params().head_b(), 0.0);
}

TEST(Init, InvalidShapeIsRejected) {
    EXPECT_THROW(init_model({0, 4, 3}, 1), ContractError);
    EXPECT_THROW(init_model({1, 0, 3}, 1), ContractError);
    EXPECT_THROW(init_model({1, 4, 3, 0.0}, 1), ContractError);
}

TEST(Cell, ZeroWeightsGiveZeroState) {
    const LstmModel m({1, 3, 2});
    const auto out = cell_step(m.layer(0), MatrixXd::Constant(2, 1, 7.0), MatrixXd::Zero(3, 1), MatrixXd::Zero(3, 1));
    EXPECT_TRUE(out.h.isZero(0.0));
    EXPECT_TRUE(out.c.isZero(0.0));
    EXPECT_TRUE((out.cache.input_gate.array() == 0.5).all());
}

TEST(Cell, SaturatedGatesKeepTheCell) {
    LstmModel m({1, 2, 1});
    m.params().b(0).head(2).setConstant(-800.0);    // input gate shut
    m.params().b(0).segment(2, 2).setConstant(800.0);  // forget gate open
    MatrixXd c_prev(2, 1);
    c_prev << 0.3, -1.7;
    const auto out = cell_step(m.layer(0), MatrixXd::Ones(1, 1), MatrixXd::Zero(2, 1), c_prev);
    EXPECT_EQ(out.c, c_prev);
}

TEST(Cell, MatchesScalarReference) {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_model({1, 4, 3}, 100 + trial, 1.0);
        const auto x = random_matrix(3, 1, rng);
        const auto h0 = random_matrix(4, 1, rng);
        const auto c0 = random_matrix(4, 1, rng);
        const auto out = cell_step(m.layer(0), x, h0, c0);
        std::vector<double> h(h0.data(), h0.data() + 4), c(c0.data(), c0.data() + 4);
        reference_cell(m.layer(0), {x(0), x(1), x(2)}, h, c);
        for (int k = 0; k < 4; ++k) {
            EXPECT_NEAR(out.h(k), h[k], 1e-14);
            EXPECT_NEAR(out.c(k), c[k], 1e-14);
        }
    }
}

TEST(Cell, DimensionMismatchIsRejected) {
    const LstmModel m({1, 3, 2});
    EXPECT_THROW(cell_step(m.layer(0), MatrixXd::Zero(3, 1), MatrixXd::Zero(3, 1), MatrixXd::Zero(3, 1)),
                 ContractError);
}

TEST(Forward, MatchesHandUnroll) {
    const ModelShape shape{1, 2, 2, 1.0, InputMode::Sequence};
    const auto m = random_model(shape, 7, 0.8);
    MatrixXd x(2, 3);
    x << 0.1, -0.4, 0.9, 0.5, 0.2, -0.3;
    const auto out = forward(m, x, 3, zero_state(shape));
    std::vector<double> h(2, 0.0), c(2, 0.0);
    for (int t = 0; t < 3; ++t) reference_cell(m.layer(0), {x(0, t), x(1, t)}, h, c);
    const double expected = m.params().head_w()(0) * h[0] + m.params().head_w()(1) * h[1] + m.params().head_b();
    EXPECT_NEAR(out.predictions(0), expected, 1e-14);
}

TEST(Forward, StackedLayersMatchHandUnroll) {
    const ModelShape shape{2, 3, 2, 1.0, InputMode::Sequence};
    const auto m = random_model(shape, 8, 0.8);
    Rng rng(1);
    const auto x = random_matrix(2, 4, rng);
    const auto out = forward(m, x, 4, zero_state(shape));
    std::vector<double> h0(3, 0.0), c0(3, 0.0), h1(3, 0.0), c1(3, 0.0);
    for (int t = 0; t < 4; ++t) {
        reference_cell(m.layer(0), {x(0, t), x(1, t)}, h0, c0);
        reference_cell(m.layer(1), h0, h1, c1);
    }
    double expected = m.params().head_b();
    for (int k = 0; k < 3; ++k) expected += m.params().head_w()(k) * h1[k];
    EXPECT_NEAR(out.predictions(0), expected, 1e-14);
}

TEST(Forward, ZeroHeadGivesTheBias) {
    const ModelShape shape{2, 4, 3};
    auto m = random_model(shape, 9);
    m.params().head_w().setZero();
    m.params().head_b() = 0.625;
    Rng rng(2);
    const auto out = forward(m, random_matrix(3, 1, rng), 1, random_state(shape, 1, rng));
    EXPECT_EQ(out.predictions(0), 0.625);
}

TEST(Forward, KeepOneMasksChangeNothing) {
    const ModelShape shape{3, 4, 2, 1.0, InputMode::Sequence};
    const auto m = random_model(shape, 10);
    Rng rng(3);
    const auto x = random_matrix(2, 6 * 2, rng);
    const auto masks = sample_dropout_masks(shape, 6, 2, rng);
    for (const auto& mask : masks.masks) EXPECT_TRUE((mask.array() == 1.0).all());
    const auto a = forward(m, x, 6, zero_state(shape, 2), &masks);
    const auto b = forward(m, x, 6, zero_state(shape, 2));
    EXPECT_EQ(a.predictions, b.predictions);
}

TEST(Forward, BatchColumnsAreIndependent) {
    const ModelShape shape{2, 5, 3, 1.0, InputMode::Sequence};
    const auto m = random_model(shape, 11);
    Rng rng(4);
    const auto x = random_matrix(3, 4 * 3, rng);
    const auto batched = forward(m, x, 4, zero_state(shape, 3));
    for (Eigen::Index b = 0; b < 3; ++b) {
        MatrixXd single(3, 4);
        for (Eigen::Index t = 0; t < 4; ++t) single.col(t) = x.col(t * 3 + b);
        const auto alone = forward(m, single, 4, zero_state(shape, 1));
        EXPECT_NEAR(alone.predictions(0), batched.predictions(b), 1e-14);
    }
}

TEST(Forward, FlatModeCarriedStateEqualsOneSequence) {
    const ModelShape flat{2, 4, 5, 1.0, InputMode::Flat};
    auto seq_shape = flat;
    seq_shape.input_mode = InputMode::Sequence;
    const auto m = random_model(flat, 12);
    LstmModel seq(seq_shape);
    std::copy(m.params().values().begin(), m.params().values().end(), seq.params().values().begin());
    Rng rng(5);
    const auto x = random_matrix(5, 6, rng);
    auto state = zero_state(flat);
    double last = 0.0;
    for (Eigen::Index k = 0; k < 6; ++k) {
        auto out = forward(m, x.col(k), 1, state);
        last = out.predictions(0);
        state = std::move(out.state);
    }
    const auto whole = forward(seq, x, 6, zero_state(seq_shape));
    EXPECT_NEAR(whole.predictions(0), last, 1e-14);
    for (std::size_t l = 0; l < 2; ++l) EXPECT_TRUE(whole.state.h[l].isApprox(state.h[l], 1e-14));
}

TEST(Forward, FlatModeRejectsSeveralSteps) {
    const ModelShape shape{1, 2, 3, 1.0, InputMode::Flat};
    const LstmModel m(shape);
    EXPECT_THROW(forward(m, MatrixXd::Zero(3, 2), 2, zero_state(shape)), ContractError);
    EXPECT_THROW(forward(m, MatrixXd::Zero(4, 1), 1, zero_state(shape)), ContractError);
}

TEST(Forward, InferMatchesForward) {
    const ModelShape shape{2, 6, 3, 0.5, InputMode::Sequence};
    const auto m = random_model(shape, 13);
    Rng rng(6);
    const auto x = random_matrix(3, 5 * 2, rng);
    auto state = zero_state(shape, 2);
    const auto a = infer(m, x, 5, state);
    const auto b = forward(m, x, 5, zero_state(shape, 2));
    EXPECT_EQ(a, b.predictions);
    EXPECT_EQ(state.c[1], b.state.c[1]);
}

TEST(Dropout, MonteCarloMeanMatchesNoDropoutActivation) {
    const ModelShape shape{2, 6, 3, 0.5, InputMode::Sequence};
    const auto m = random_model(shape, 14);
    Rng rng(7);
    const auto x = random_matrix(3, 4, rng);
    const MatrixXd h = forward(m, x, 4, zero_state(shape)).tape.layers[0].h;
    constexpr int draws = 4000;
    MatrixXd sum = MatrixXd::Zero(h.rows(), h.cols());
    for (int k = 0; k < draws; ++k) {
        const auto masks = sample_dropout_masks(shape, 4, 1, rng);
        sum += forward(m, x, 4, zero_state(shape), &masks).tape.layers[1].x;
    }
    const MatrixXd mean = sum / draws;
    const double p = shape.dropout_keep;
    // Every entry is an independent Monte-Carlo mean: their standardized errors
    // pooled together must sit within 3 sigma, and no single entry may stray
    // past 4 sigma (a Bonferroni-style allowance for the 24 comparisons).
    double z_sum = 0.0;
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
        for (Eigen::Index i = 0; i < h.rows(); ++i) {
            const double sigma = std::abs(h(i, j)) * std::sqrt((1.0 - p) / p / draws);
            const double z = (mean(i, j) - h(i, j)) / sigma;
            EXPECT_LE(std::abs(z), 4.0);
            z_sum += z;
        }
    }
    EXPECT_LE(std::abs(z_sum) / std::sqrt(static_cast<double>(h.size())), 3.0);
}

TEST(Dropout, KeepRateIsHonoured) {
    const ModelShape shape{2, 50, 3, 0.3};
    Rng rng(8);
    const auto masks = sample_dropout_masks(shape, 100, 4, rng);
    ASSERT_EQ(masks.masks.size(), 1u);
    EXPECT_NEAR(masks.masks[0].mean(), 0.3, 0.01);
    EXPECT_TRUE(sample_dropout_masks({1, 4, 3, 0.5}, 10, 1, rng).masks.empty());
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
    const ModelShape shape{2, 4, 3, 1.0, InputMode::Sequence};
    const auto m = random_model(shape, 15);
    Rng rng(9);
    const auto out = forward(m, random_matrix(3, 5, rng), 5, zero_state(shape));
    const auto g = backward(m, out.tape, Eigen::VectorXd::Zero(1));
    for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, GradientsAddAcrossExamples) {
    const ModelShape shape{1, 4, 2, 1.0, InputMode::Sequence};
    const auto m = random_model(shape, 16);
    Rng rng(10);
    const auto x = random_matrix(2, 3 * 2, rng);
    const auto both = backward(m, forward(m, x, 3, zero_state(shape, 2)).tape, Eigen::Vector2d(1.0, 1.0));
    Gradients sum(shape);
    for (Eigen::Index b = 0; b < 2; ++b) {
        MatrixXd single(2, 3);
        for (Eigen::Index t = 0; t < 3; ++t) single.col(t) = x.col(t * 2 + b);
        backward_accumulate(m, forward(m, single, 3, zero_state(shape)).tape, Eigen::VectorXd::Ones(1), sum);
    }
    for (std::size_t k = 0; k < sum.size(); ++k) EXPECT_NEAR(sum.values()[k], both.values()[k], 1e-13);
}

TEST(Backward, MatchesFiniteDifferencesSequenceMode) {
    const ModelShape shape{1, 4, 7, 1.0, InputMode::Sequence};
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto m = random_model(shape, 200 + trial);
        const auto x = random_matrix(7, 5, rng);
        EXPECT_LT(gradient_check(m, x, 5, zero_state(shape), nullptr, Eigen::VectorXd::Ones(1)), 1e-4)
            << "trial " << trial;
    }
}

TEST(Backward, MatchesFiniteDifferencesWithBatchAndState) {
    const ModelShape shape{1, 3, 4, 1.0, InputMode::Sequence};
    Rng rng(12);
    auto m = random_model(shape, 300);
    const auto x = random_matrix(4, 4 * 3, rng);
    const auto s = random_state(shape, 3, rng);
    EXPECT_LT(gradient_check(m, x, 4, s, nullptr, Eigen::Vector3d(0.7, -1.3, 0.4)), 1e-4);
}

TEST(Backward, MatchesFiniteDifferencesStackedWithDropout) {
    const ModelShape shape{3, 3, 2, 0.6, InputMode::Sequence};
    Rng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        auto m = random_model(shape, 400 + trial);
        const auto x = random_matrix(2, 4 * 2, rng);
        const auto masks = sample_dropout_masks(shape, 4, 2, rng);
        EXPECT_LT(gradient_check(m, x, 4, zero_state(shape, 2), &masks, Eigen::Vector2d(1.0, -0.5)), 1e-4);
    }
}

TEST(Backward, MatchesFiniteDifferencesFlatMode) {
    const ModelShape shape{2, 4, 11, 1.0, InputMode::Flat};
    Rng rng(14);
    auto m = random_model(shape, 500);
    const auto x = random_matrix(11, 1, rng);
    EXPECT_LT(gradient_check(m, x, 1, random_state(shape, 1, rng), nullptr, Eigen::VectorXd::Ones(1)), 1e-4);
}

TEST(Backward, TapeFromAnotherModelIsRejected) {
    const ModelShape a{1, 3, 2, 1.0, InputMode::Sequence};
    const ModelShape b{2, 3, 2, 1.0, InputMode::Sequence};
    const auto ma = random_model(a, 1);
    const auto mb = random_model(b, 2);
    const auto tape = forward(ma, MatrixXd::Zero(2, 3), 3, zero_state(a)).tape;
    EXPECT_THROW(backward(mb, tape, Eigen::VectorXd::Ones(1)), ContractError);
}
