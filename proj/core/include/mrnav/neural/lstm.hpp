#pragma once

#include <Eigen/Core>
#include <random>
#include <vector>

namespace mrnav::neural {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// LSTM layer parameters. Gate rows are packed [input; forget; cell; output],
/// each hidden_size tall. Cell and hidden activations are tanh, gates sigmoid.
struct LstmWeights {
  Mat w_input;   // 4H x D
  Mat w_hidden;  // 4H x H
  Vec bias;      // 4H
  int hidden_size = 0;
  int input_size = 0;
};

struct DenseWeights {
  Mat w;  // out x in
  Vec b;  // out
  bool tanh_activation = true;
  int out_size() const { return static_cast<int>(w.rows()); }
  int in_size() const { return static_cast<int>(w.cols()); }
};

LstmWeights make_lstm(int input_size, int hidden_size, std::mt19937_64& rng);
DenseWeights make_dense(int input_size, int output_size, bool tanh_activation,
                        std::mt19937_64& rng);
LstmWeights zeros_like(const LstmWeights& w);
DenseWeights zeros_like(const DenseWeights& w);

/// Per-step activations kept for backpropagation through time. Batch samples
/// are columns. For the constant-input variant only x[0] is stored.
struct LstmCache {
  std::vector<Mat> x;
  std::vector<Mat> gate_i, gate_f, gate_g, gate_o;
  std::vector<Mat> c, tanh_c, h;
  bool constant_input = false;
  Eigen::Index batch() const { return h.empty() ? 0 : h.front().cols(); }
  int steps() const { return static_cast<int>(h.size()); }
};

/// Unroll over a step-major sequence xs (each D x B); initial h, c are zero.
void lstm_forward(const LstmWeights& w, const std::vector<Mat>& xs, LstmCache& cache);

/// Unroll `steps` times feeding the same input x every step; the input-weight
/// product is computed once.
void lstm_forward_constant(const LstmWeights& w, const Mat& x, int steps, LstmCache& cache);

/// Reverse-mode pass. dh_per_step[t] seeds the gradient at step t's hidden
/// output (an empty matrix means zero). Accumulates into dw_*/db; if dx is
/// non-null it receives the per-step input gradients (or, for a constant-input
/// cache, a single matrix holding the sum over steps).
void lstm_backward(const LstmWeights& w, const LstmCache& cache,
                   const std::vector<Mat>& dh_per_step, LstmWeights& grads,
                   std::vector<Mat>* dx);

Mat dense_forward(const DenseWeights& w, const Mat& x);

/// x and y are the cached dense input/output; returns the input gradient and
/// accumulates parameter gradients into `grads`.
Mat dense_backward(const DenseWeights& w, const Mat& x, const Mat& y, const Mat& dy,
                   DenseWeights& grads);

}  // namespace mrnav::neural
