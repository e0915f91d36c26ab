#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sayt/corpus.hpp"
#include "sayt/embeddings.hpp"
#include "sayt/policies.hpp"

namespace sayt {

using Matrix = Eigen::MatrixXd;

/// Gate rows are stacked in the order i, f, g, o.
struct LstmWeights {
    Matrix wx;  // 4H x d
    Matrix wh;  // 4H x H
    Vector b;   // 4H

    [[nodiscard]] Eigen::Index hidden() const { return wh.cols(); }
    [[nodiscard]] Eigen::Index input() const { return wx.cols(); }
    static LstmWeights zeros(Eigen::Index input, Eigen::Index hidden);
};

struct LstmStepCache {
    Vector x, h_prev, c_prev;
    Vector i, f, g, o;
    Vector c, tanh_c, h;
};

/// One step of the standard LSTM cell: c' = f*c + i*g, h' = o*tanh(c').
std::pair<Vector, Vector> lstm_step(LstmWeights const &w, Vector const &x, Vector const &h, Vector const &c);
LstmStepCache lstm_step_cached(LstmWeights const &w, Vector const &x, Vector const &h, Vector const &c);

/// Accumulates weight gradients into `grad` given dL/dh' and dL/dc'; writes
/// dL/dh and dL/dc for the previous state.
void lstm_step_backward(LstmWeights const &w, LstmStepCache const &cache, Vector const &dh, Vector const &dc,
                        LstmWeights &grad, Vector &dh_prev, Vector &dc_prev);

struct QNetworkDims {
    Eigen::Index d = 50;
    Eigen::Index hidden = 64;
    Eigen::Index proj = 32;

    bool operator==(QNetworkDims const &) const = default;
};

/// Learnable tensors of the Siamese Bi-LSTM Q-network. Also used for
/// gradients and optimizer moments.
struct QNetworkWeights {
    QNetworkDims dims;
    LstmWeights lstm_fwd;
    LstmWeights lstm_bwd;
    Matrix w1;  // P x 2H
    Vector b1;  // P
    Matrix w2;  // 2 x 2P
    Vector b2;  // 2

    static QNetworkWeights zeros(QNetworkDims dims);
    bool operator==(QNetworkWeights const &other) const;
};

struct TensorView {
    char const *name;
    Eigen::Index rows;
    Eigen::Index cols;
    std::span<double> values;
};

struct ConstTensorView {
    char const *name;
    Eigen::Index rows;
    Eigen::Index cols;
    std::span<double const> values;
};

/// All ten tensors in a fixed order. Matrices are column-major in memory.
std::vector<TensorView> tensors(QNetworkWeights &w);
std::vector<ConstTensorView> tensors(QNetworkWeights const &w);

/// Weights plus the frozen token-embedding table feeding the encoder.
struct QNetworkParams {
    QNetworkWeights weights;
    std::shared_ptr<EmbeddingTable const> embedding;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per matrix, zero biases, forget
/// gate bias 1. Draws fwd.wx, fwd.wh, bwd.wx, bwd.wh, w1, w2 in that order.
QNetworkWeights init_weights(QNetworkDims dims, std::mt19937_64 &rng);
QNetworkParams make_qnetwork(std::shared_ptr<EmbeddingTable const> embedding, QNetworkDims dims,
                             std::mt19937_64 &rng);

/// Final forward hidden state ++ final backward hidden state; zeros for an
/// empty sequence.
Vector bilstm_encode(QNetworkParams const &params, Tokens const &tokens);

using QValues = std::array<double, 2>;

constexpr std::size_t action_index(Action a) { return a == Action::search ? 1 : 0; }

/// [Q(WAIT), Q(SEARCH)] for the state (q1, q2). Both branches share the
/// encoder and the first dense layer.
QValues qnet_forward(QNetworkParams const &params, Tokens const &q1, Tokens const &q2);

struct TrainingExample {
    Tokens q1;
    Tokens q2;
    Action action = Action::search;
    double target = 0.0;
};

struct Gradients {
    QNetworkWeights grads;
    /// Mean of (target - Q(s, a))^2 over the batch.
    double loss = 0.0;
};

/// Exact gradients of the mean squared TD error by backpropagation through
/// time. The embedding table receives no gradient.
Gradients qnet_backward(QNetworkParams const &params, std::span<TrainingExample const> batch);

struct AdamState {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    QNetworkWeights m;
    QNetworkWeights v;

    static AdamState for_weights(QNetworkWeights const &w, double lr);
};

void adam_step(QNetworkWeights &weights, QNetworkWeights const &grads, AdamState &opt);

constexpr int checkpoint_version = 1;

/// Versioned JSON with dims and row-major named tensors. The embedding table
/// is not stored; it is supplied on load.
void save_checkpoint(QNetworkWeights const &weights, std::filesystem::path const &path);
std::string checkpoint_json(QNetworkWeights const &weights);
QNetworkWeights load_checkpoint_weights(std::filesystem::path const &path);
QNetworkWeights parse_checkpoint(std::string const &text);
QNetworkParams load_checkpoint(std::filesystem::path const &path, std::shared_ptr<EmbeddingTable const> embedding);

}  // namespace sayt
