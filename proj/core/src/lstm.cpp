#include "mrnav/neural/lstm.hpp"

#include <cmath>

namespace mrnav::neural {
namespace {

Mat glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

inline Mat sigmoid(const Mat& x) { return ((-x.array()).exp() + 1.0).inverse().matrix(); }

}  // namespace

LstmWeights make_lstm(int input_size, int hidden_size, std::mt19937_64& rng) {
  LstmWeights w;
  w.input_size = input_size;
  w.hidden_size = hidden_size;
  w.w_input = glorot(4 * hidden_size, input_size, rng);
  w.w_hidden = glorot(4 * hidden_size, hidden_size, rng);
  w.bias = Vec::Zero(4 * hidden_size);
  // Forget gate bias starts at 1 so early training keeps cell memory.
  w.bias.segment(hidden_size, hidden_size).setOnes();
  return w;
}

DenseWeights make_dense(int input_size, int output_size, bool tanh_activation,
                        std::mt19937_64& rng) {
  DenseWeights w;
  w.w = glorot(output_size, input_size, rng);
  w.b = Vec::Zero(output_size);
  w.tanh_activation = tanh_activation;
  return w;
}

LstmWeights zeros_like(const LstmWeights& w) {
  LstmWeights z;
  z.input_size = w.input_size;
  z.hidden_size = w.hidden_size;
  z.w_input = Mat::Zero(w.w_input.rows(), w.w_input.cols());
  z.w_hidden = Mat::Zero(w.w_hidden.rows(), w.w_hidden.cols());
  z.bias = Vec::Zero(w.bias.size());
  return z;
}

DenseWeights zeros_like(const DenseWeights& w) {
  DenseWeights z;
  z.w = Mat::Zero(w.w.rows(), w.w.cols());
  z.b = Vec::Zero(w.b.size());
  z.tanh_activation = w.tanh_activation;
  return z;
}

namespace {

void lstm_step(const LstmWeights& w, const Mat& x_contrib, const Mat& h_prev,
               const Mat& c_prev, LstmCache& cache) {
  const int hs = w.hidden_size;
  Mat gates = x_contrib;
  gates.noalias() += w.w_hidden * h_prev;
  gates.colwise() += w.bias;

  Mat gi = sigmoid(gates.topRows(hs));
  Mat gf = sigmoid(gates.middleRows(hs, hs));
  Mat gg = gates.middleRows(2 * hs, hs).array().tanh().matrix();
  Mat go = sigmoid(gates.bottomRows(hs));

  Mat c = (gf.array() * c_prev.array() + gi.array() * gg.array()).matrix();
  Mat tc = c.array().tanh().matrix();
  Mat h = (go.array() * tc.array()).matrix();

  cache.gate_i.push_back(std::move(gi));
  cache.gate_f.push_back(std::move(gf));
  cache.gate_g.push_back(std::move(gg));
  cache.gate_o.push_back(std::move(go));
  cache.c.push_back(std::move(c));
  cache.tanh_c.push_back(std::move(tc));
  cache.h.push_back(std::move(h));
}

}  // namespace

void lstm_forward(const LstmWeights& w, const std::vector<Mat>& xs, LstmCache& cache) {
  cache = LstmCache{};
  cache.x = xs;
  const Eigen::Index batch = xs.empty() ? 0 : xs.front().cols();
  Mat h = Mat::Zero(w.hidden_size, batch);
  Mat c = Mat::Zero(w.hidden_size, batch);
  for (const Mat& x : xs) {
    Mat x_contrib = w.w_input * x;
    lstm_step(w, x_contrib, h, c, cache);
    h = cache.h.back();
    c = cache.c.back();
  }
}

void lstm_forward_constant(const LstmWeights& w, const Mat& x, int steps, LstmCache& cache) {
  cache = LstmCache{};
  cache.constant_input = true;
  cache.x.push_back(x);
  const Mat x_contrib = w.w_input * x;
  Mat h = Mat::Zero(w.hidden_size, x.cols());
  Mat c = Mat::Zero(w.hidden_size, x.cols());
  for (int t = 0; t < steps; ++t) {
    lstm_step(w, x_contrib, h, c, cache);
    h = cache.h.back();
    c = cache.c.back();
  }
}

void lstm_backward(const LstmWeights& w, const LstmCache& cache,
                   const std::vector<Mat>& dh_per_step, LstmWeights& grads,
                   std::vector<Mat>* dx) {
  const int steps = cache.steps();
  const int hs = w.hidden_size;
  const Eigen::Index batch = cache.batch();

  if (dx) {
    if (cache.constant_input) {
      dx->assign(1, Mat::Zero(w.input_size, batch));
    } else {
      dx->assign(static_cast<std::size_t>(steps), Mat());
    }
  }

  Mat dh_next = Mat::Zero(hs, batch);
  Mat dc_next = Mat::Zero(hs, batch);
  Mat dgates(4 * hs, batch);

  for (int t = steps - 1; t >= 0; --t) {
    const std::size_t ti = static_cast<std::size_t>(t);
    Mat dh = dh_next;
    if (ti < dh_per_step.size() && dh_per_step[ti].size() > 0) dh += dh_per_step[ti];

    const Mat& gi = cache.gate_i[ti];
    const Mat& gf = cache.gate_f[ti];
    const Mat& gg = cache.gate_g[ti];
    const Mat& go = cache.gate_o[ti];
    const Mat& tc = cache.tanh_c[ti];

    Mat dc = dc_next;
    dc.array() += dh.array() * go.array() * (1.0 - tc.array().square());

    dgates.topRows(hs) = (dc.array() * gg.array() * gi.array() * (1.0 - gi.array())).matrix();
    if (t > 0) {
      dgates.middleRows(hs, hs) =
          (dc.array() * cache.c[ti - 1].array() * gf.array() * (1.0 - gf.array())).matrix();
    } else {
      dgates.middleRows(hs, hs).setZero();  // c_{-1} = 0
    }
    dgates.middleRows(2 * hs, hs) = (dc.array() * gi.array() * (1.0 - gg.array().square())).matrix();
    dgates.bottomRows(hs) = (dh.array() * tc.array() * go.array() * (1.0 - go.array())).matrix();

    const Mat& x_t = cache.constant_input ? cache.x[0] : cache.x[ti];
    grads.w_input.noalias() += dgates * x_t.transpose();
    if (t > 0) grads.w_hidden.noalias() += dgates * cache.h[ti - 1].transpose();
    grads.bias += dgates.rowwise().sum();

    if (dx) {
      if (cache.constant_input) {
        (*dx)[0].noalias() += w.w_input.transpose() * dgates;
      } else {
        (*dx)[ti] = w.w_input.transpose() * dgates;
      }
    }

    dh_next.noalias() = w.w_hidden.transpose() * dgates;
    dc_next = (dc.array() * gf.array()).matrix();
  }
}

Mat dense_forward(const DenseWeights& w, const Mat& x) {
  Mat y = w.w * x;
  y.colwise() += w.b;
  if (w.tanh_activation) y = y.array().tanh().matrix();
  return y;
}

Mat dense_backward(const DenseWeights& w, const Mat& x, const Mat& y, const Mat& dy,
                   DenseWeights& grads) {
  Mat dpre = dy;
  if (w.tanh_activation) dpre.array() *= 1.0 - y.array().square();
  grads.w.noalias() += dpre * x.transpose();
  grads.b += dpre.rowwise().sum();
  return w.w.transpose() * dpre;
}

}  // namespace mrnav::neural
