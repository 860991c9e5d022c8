#include "mrnav/neural/model.hpp"

#include <cmath>
#include <sstream>

#include "mrnav/errors.hpp"

namespace mrnav {

void ObservationHistory::validate() const {
  const std::size_t len = ego_velocities.size();
  if (len == 0) throw ModelContractError("observation: empty ego velocity history");
  if (neighbor_rel_positions.size() != neighbor_rel_velocities.size()) {
    throw ModelContractError("observation: neighbor position/velocity branch count mismatch");
  }
  for (std::size_t r = 0; r < neighbor_rel_positions.size(); ++r) {
    if (neighbor_rel_positions[r].size() != len || neighbor_rel_velocities[r].size() != len) {
      throw ModelContractError("observation: neighbor history length mismatch");
    }
  }
  if (obstacle_rel_positions.size() != obstacle_rel_velocities.size()) {
    throw ModelContractError("observation: obstacle position/velocity count mismatch");
  }
}

}  // namespace mrnav

namespace mrnav::neural {
namespace {

struct ModelCache {
  LstmCache query;
  std::vector<LstmCache> neighbor_branches;
  std::vector<Mat> obstacle_in;    // cached dense inputs
  std::vector<Mat> obstacle_out;   // cached dense outputs
  Eigen::MatrixXi pool_argmax;     // branch index per (row, col); -1 = empty set
  Mat pooled;                      // z_e
  Mat concat;                      // [z_q; z_e]
  LstmCache decoder;
  std::vector<Mat> dense_in, dense_out;  // per step
  std::vector<Mat> out;                  // per step (3 x B), linear outputs
};

void forward_batch(const HistoryBatch& batch, const ModelWeights& w, bool zero_environment,
                   ModelCache& cache) {
  const Eigen::Index b = batch.batch;
  const int bh = w.neighbor_encoder.hidden_size;

  lstm_forward(w.query_encoder, batch.ego, cache.query);
  const Mat& z_q = cache.query.h.back();

  cache.neighbor_branches.resize(batch.neighbors.size());
  std::vector<const Mat*> encodings;
  if (!zero_environment) {
    for (std::size_t r = 0; r < batch.neighbors.size(); ++r) {
      lstm_forward(w.neighbor_encoder, batch.neighbors[r], cache.neighbor_branches[r]);
      encodings.push_back(&cache.neighbor_branches[r].h.back());
    }
    cache.obstacle_in = batch.obstacles;
    cache.obstacle_out.resize(batch.obstacles.size());
    for (std::size_t o = 0; o < batch.obstacles.size(); ++o) {
      cache.obstacle_out[o] = dense_forward(w.obstacle_encoder, batch.obstacles[o]);
      encodings.push_back(&cache.obstacle_out[o]);
    }
  }

  // Global max pool along the branch axis; an empty set encodes as zeros.
  cache.pooled = Mat::Zero(bh, b);
  cache.pool_argmax = Eigen::MatrixXi::Constant(bh, b, -1);
  for (std::size_t e = 0; e < encodings.size(); ++e) {
    const Mat& enc = *encodings[e];
    for (Eigen::Index col = 0; col < b; ++col) {
      for (Eigen::Index row = 0; row < bh; ++row) {
        if (cache.pool_argmax(row, col) < 0 || enc(row, col) > cache.pooled(row, col)) {
          cache.pooled(row, col) = enc(row, col);
          cache.pool_argmax(row, col) = static_cast<int>(e);
        }
      }
    }
  }

  cache.concat.resize(z_q.rows() + bh, b);
  cache.concat.topRows(z_q.rows()) = z_q;
  cache.concat.bottomRows(bh) = cache.pooled;

  lstm_forward_constant(w.recurrent_decoder, cache.concat, w.t_horizon, cache.decoder);

  cache.dense_in.resize(static_cast<std::size_t>(w.t_horizon));
  cache.dense_out.resize(static_cast<std::size_t>(w.t_horizon));
  cache.out.resize(static_cast<std::size_t>(w.t_horizon));
  for (int t = 0; t < w.t_horizon; ++t) {
    const std::size_t ti = static_cast<std::size_t>(t);
    cache.dense_in[ti] = cache.decoder.h[ti];
    cache.dense_out[ti] = dense_forward(w.dense_decoder, cache.dense_in[ti]);
    cache.out[ti] = dense_forward(w.output_layer, cache.dense_out[ti]);
  }
}

// Data-term gradient seeded with d_out per step; routes environment gradient
// through the pooling argmax and sums shared-branch gradients.
void backward_batch(const HistoryBatch& batch, const ModelWeights& w, const ModelCache& cache,
                    const std::vector<Mat>& d_out, bool zero_environment,
                    ModelGradients& grads) {
  const Eigen::Index b = batch.batch;
  const int qh = w.query_encoder.hidden_size;
  const int bh = w.neighbor_encoder.hidden_size;
  const int horizon = w.t_horizon;

  std::vector<Mat> d_decoder_h(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    const std::size_t ti = static_cast<std::size_t>(t);
    const Mat d_dense_out = dense_backward(w.output_layer, cache.dense_out[ti], cache.out[ti],
                                           d_out[ti], grads.output_layer);
    d_decoder_h[ti] = dense_backward(w.dense_decoder, cache.dense_in[ti], cache.dense_out[ti],
                                     d_dense_out, grads.dense_decoder);
  }

  std::vector<Mat> d_concat_steps;
  lstm_backward(w.recurrent_decoder, cache.decoder, d_decoder_h, grads.recurrent_decoder,
                &d_concat_steps);
  const Mat& d_concat = d_concat_steps[0];  // constant input: already summed

  const Mat d_zq = d_concat.topRows(qh);
  std::vector<Mat> d_query_seed(cache.query.h.size());
  d_query_seed.back() = d_zq;
  lstm_backward(w.query_encoder, cache.query, d_query_seed, grads.query_encoder, nullptr);

  if (zero_environment) return;

  const std::size_t n_branches = batch.neighbors.size() + batch.obstacles.size();
  if (n_branches == 0) return;
  const Mat d_ze = d_concat.bottomRows(bh);

  std::vector<Mat> d_branch(n_branches, Mat::Zero(bh, b));
  for (Eigen::Index col = 0; col < b; ++col) {
    for (Eigen::Index row = 0; row < bh; ++row) {
      const int e = cache.pool_argmax(row, col);
      if (e >= 0) d_branch[static_cast<std::size_t>(e)](row, col) = d_ze(row, col);
    }
  }

  for (std::size_t r = 0; r < batch.neighbors.size(); ++r) {
    std::vector<Mat> seed(cache.neighbor_branches[r].h.size());
    seed.back() = d_branch[r];
    lstm_backward(w.neighbor_encoder, cache.neighbor_branches[r], seed, grads.neighbor_encoder,
                  nullptr);
  }
  for (std::size_t o = 0; o < batch.obstacles.size(); ++o) {
    dense_backward(w.obstacle_encoder, cache.obstacle_in[o], cache.obstacle_out[o],
                   d_branch[batch.neighbors.size() + o], grads.obstacle_encoder);
  }
}

Mat pack_vec3(const Vec3& v) {
  Mat m(3, 1);
  m.col(0) = v;
  return m;
}

Mat pack_pair(const Vec3& p, const Vec3& v) {
  Mat m(6, 1);
  m.col(0).head<3>() = p;
  m.col(0).tail<3>() = v;
  return m;
}

HistoryBatch batch_of_one(const ObservationHistory& history, int t_horizon,
                          const Vec3Seq* truth) {
  history.validate();
  HistoryBatch batch;
  batch.batch = 1;
  const std::size_t len = history.history_length();
  batch.ego.reserve(len);
  for (const auto& v : history.ego_velocities) batch.ego.push_back(pack_vec3(v));
  batch.neighbors.resize(history.num_neighbors());
  for (std::size_t r = 0; r < history.num_neighbors(); ++r) {
    batch.neighbors[r].reserve(len);
    for (std::size_t t = 0; t < len; ++t) {
      batch.neighbors[r].push_back(
          pack_pair(history.neighbor_rel_positions[r][t], history.neighbor_rel_velocities[r][t]));
    }
  }
  for (std::size_t o = 0; o < history.num_obstacles(); ++o) {
    batch.obstacles.push_back(
        pack_pair(history.obstacle_rel_positions[o], history.obstacle_rel_velocities[o]));
  }
  if (truth) {
    if (static_cast<int>(truth->size()) != t_horizon) {
      throw ModelContractError("target velocity sequence length != model horizon");
    }
    for (const auto& v : *truth) batch.targets.push_back(pack_vec3(v));
  }
  return batch;
}

double weight_squared_sum(const ModelWeights& w) {
  ModelWeights& mutable_w = const_cast<ModelWeights&>(w);
  double sum = 0.0;
  for (const auto& view : param_views(mutable_w)) {
    if (view.mat) sum += view.mat->squaredNorm();
  }
  return sum;
}

}  // namespace

ModelDims ModelWeights::dims() const {
  ModelDims d;
  d.query_hidden = query_encoder.hidden_size;
  d.branch_hidden = neighbor_encoder.hidden_size;
  d.decoder_hidden = recurrent_decoder.hidden_size;
  d.dense_decoder = dense_decoder.out_size();
  d.t_obs = t_obs;
  d.t_horizon = t_horizon;
  return d;
}

void ModelWeights::validate() const {
  auto check_lstm = [](const LstmWeights& w, const char* name) {
    if (w.w_input.rows() != 4 * w.hidden_size || w.w_input.cols() != w.input_size ||
        w.w_hidden.rows() != 4 * w.hidden_size || w.w_hidden.cols() != w.hidden_size ||
        w.bias.size() != 4 * w.hidden_size) {
      throw ModelContractError(std::string("model: inconsistent LSTM shapes in ") + name);
    }
  };
  check_lstm(query_encoder, "query_encoder");
  check_lstm(neighbor_encoder, "neighbor_encoder");
  check_lstm(recurrent_decoder, "recurrent_decoder");
  if (query_encoder.input_size != 3) {
    throw ModelContractError("model: query_encoder input must be 3 (velocity)");
  }
  if (neighbor_encoder.input_size != 6) {
    throw ModelContractError("model: neighbor_encoder input must be 6 (rel pos+vel)");
  }
  if (obstacle_encoder.in_size() != 6) {
    throw ModelContractError("model: obstacle_encoder input must be 6 (rel pos+vel)");
  }
  // Branch encodings are pooled together, so they must have equal length.
  if (obstacle_encoder.out_size() != neighbor_encoder.hidden_size) {
    throw ModelContractError("model: obstacle encoding length != neighbor encoding length");
  }
  if (recurrent_decoder.input_size !=
      query_encoder.hidden_size + neighbor_encoder.hidden_size) {
    throw ModelContractError("model: decoder input != concatenated encoding length");
  }
  if (dense_decoder.in_size() != recurrent_decoder.hidden_size) {
    throw ModelContractError("model: dense_decoder input != decoder hidden size");
  }
  if (output_layer.in_size() != dense_decoder.out_size() || output_layer.out_size() != 3) {
    throw ModelContractError("model: output layer must map dense_decoder -> 3");
  }
  if (output_layer.tanh_activation) {
    throw ModelContractError("model: output layer must be linear");
  }
  if (t_obs < 1 || t_horizon < 1) {
    throw ModelContractError("model: t_obs and t_horizon must be >= 1");
  }
}

ModelWeights make_model(const ModelDims& dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelWeights w;
  w.query_encoder = make_lstm(3, dims.query_hidden, rng);
  w.neighbor_encoder = make_lstm(6, dims.branch_hidden, rng);
  w.obstacle_encoder = make_dense(6, dims.branch_hidden, true, rng);
  w.recurrent_decoder = make_lstm(dims.query_hidden + dims.branch_hidden, dims.decoder_hidden, rng);
  w.dense_decoder = make_dense(dims.decoder_hidden, dims.dense_decoder, true, rng);
  w.output_layer = make_dense(dims.dense_decoder, 3, false, rng);
  w.t_obs = dims.t_obs;
  w.t_horizon = dims.t_horizon;
  w.validate();
  return w;
}

ModelWeights zeros_like(const ModelWeights& w) {
  ModelWeights z;
  z.query_encoder = zeros_like(w.query_encoder);
  z.neighbor_encoder = zeros_like(w.neighbor_encoder);
  z.obstacle_encoder = zeros_like(w.obstacle_encoder);
  z.recurrent_decoder = zeros_like(w.recurrent_decoder);
  z.dense_decoder = zeros_like(w.dense_decoder);
  z.output_layer = zeros_like(w.output_layer);
  z.t_obs = w.t_obs;
  z.t_horizon = w.t_horizon;
  return z;
}

std::vector<ParamView> param_views(ModelWeights& w) {
  std::vector<ParamView> views;
  auto add_lstm = [&](const std::string& name, LstmWeights& l) {
    views.push_back({name + ".w_input", &l.w_input, nullptr});
    views.push_back({name + ".w_hidden", &l.w_hidden, nullptr});
    views.push_back({name + ".bias", nullptr, &l.bias});
  };
  auto add_dense = [&](const std::string& name, DenseWeights& d) {
    views.push_back({name + ".w", &d.w, nullptr});
    views.push_back({name + ".b", nullptr, &d.b});
  };
  add_lstm("query_encoder", w.query_encoder);
  add_lstm("neighbor_encoder", w.neighbor_encoder);
  add_dense("obstacle_encoder", w.obstacle_encoder);
  add_lstm("recurrent_decoder", w.recurrent_decoder);
  add_dense("dense_decoder", w.dense_decoder);
  add_dense("output_layer", w.output_layer);
  return views;
}

Vec3Seq forward(const ObservationHistory& history, const ModelWeights& weights,
                bool zero_environment) {
  weights.validate();
  const HistoryBatch batch = batch_of_one(history, weights.t_horizon, nullptr);
  ModelCache cache;
  forward_batch(batch, weights, zero_environment, cache);
  Vec3Seq out(static_cast<std::size_t>(weights.t_horizon));
  for (int t = 0; t < weights.t_horizon; ++t) {
    out[static_cast<std::size_t>(t)] = cache.out[static_cast<std::size_t>(t)].col(0);
  }
  return out;
}

double loss(const Vec3Seq& predicted, const Vec3Seq& truth, const ModelWeights& weights,
            double l2_lambda) {
  if (predicted.size() != truth.size() || predicted.empty()) {
    throw std::invalid_argument("loss: predicted/truth length mismatch");
  }
  double mse = 0.0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    mse += (predicted[k] - truth[k]).squaredNorm();
  }
  mse /= static_cast<double>(predicted.size());
  return mse + l2_lambda * weight_squared_sum(weights);
}

ModelGradients backward(const ObservationHistory& history, const Vec3Seq& truth,
                        const ModelWeights& weights, double l2_lambda, bool zero_environment,
                        double* loss_value) {
  weights.validate();
  const HistoryBatch batch = batch_of_one(history, weights.t_horizon, &truth);
  ModelGradients grads = zeros_like(weights);
  const double value =
      batch_loss_and_gradient(batch, weights, l2_lambda, zero_environment, &grads);
  if (loss_value) *loss_value = value;
  return grads;
}

HistoryBatch make_batch(const std::vector<const TrainingSample*>& samples) {
  if (samples.empty()) throw std::invalid_argument("make_batch: empty sample set");
  const auto& first = samples.front()->observation;
  first.validate();
  const std::size_t len = first.history_length();
  const std::size_t n_nb = first.num_neighbors();
  const std::size_t n_ob = first.num_obstacles();
  const std::size_t horizon = samples.front()->target_velocities.size();
  const Eigen::Index b = static_cast<Eigen::Index>(samples.size());

  HistoryBatch batch;
  batch.batch = b;
  batch.ego.assign(len, Mat(3, b));
  batch.neighbors.assign(n_nb, std::vector<Mat>(len, Mat(6, b)));
  batch.obstacles.assign(n_ob, Mat(6, b));
  batch.targets.assign(horizon, Mat(3, b));

  for (Eigen::Index col = 0; col < b; ++col) {
    const TrainingSample& s = *samples[static_cast<std::size_t>(col)];
    s.observation.validate();
    if (s.observation.history_length() != len || s.observation.num_neighbors() != n_nb ||
        s.observation.num_obstacles() != n_ob || s.target_velocities.size() != horizon) {
      throw ModelContractError("make_batch: samples have inconsistent shapes");
    }
    for (std::size_t t = 0; t < len; ++t) {
      batch.ego[t].col(col) = s.observation.ego_velocities[t];
      for (std::size_t r = 0; r < n_nb; ++r) {
        batch.neighbors[r][t].col(col).head<3>() = s.observation.neighbor_rel_positions[r][t];
        batch.neighbors[r][t].col(col).tail<3>() = s.observation.neighbor_rel_velocities[r][t];
      }
    }
    for (std::size_t o = 0; o < n_ob; ++o) {
      batch.obstacles[o].col(col).head<3>() = s.observation.obstacle_rel_positions[o];
      batch.obstacles[o].col(col).tail<3>() = s.observation.obstacle_rel_velocities[o];
    }
    for (std::size_t t = 0; t < horizon; ++t) {
      batch.targets[t].col(col) = s.target_velocities[t];
    }
  }
  return batch;
}

double batch_loss_and_gradient(const HistoryBatch& batch, const ModelWeights& weights,
                               double l2_lambda, bool zero_environment, ModelGradients* grads) {
  if (static_cast<int>(batch.targets.size()) != weights.t_horizon) {
    throw ModelContractError("batch targets length != model horizon");
  }
  ModelCache cache;
  forward_batch(batch, weights, zero_environment, cache);

  const double inv_scale =
      1.0 / (static_cast<double>(weights.t_horizon) * static_cast<double>(batch.batch));
  double data_loss = 0.0;
  std::vector<Mat> d_out(static_cast<std::size_t>(weights.t_horizon));
  for (int t = 0; t < weights.t_horizon; ++t) {
    const std::size_t ti = static_cast<std::size_t>(t);
    const Mat err = cache.out[ti] - batch.targets[ti];
    data_loss += err.squaredNorm();
    d_out[ti] = 2.0 * inv_scale * err;
  }
  data_loss *= inv_scale;

  if (grads) {
    backward_batch(batch, weights, cache, d_out, zero_environment, *grads);
    if (l2_lambda != 0.0) {
      ModelWeights& mutable_w = const_cast<ModelWeights&>(weights);
      auto wv = param_views(mutable_w);
      auto gv = param_views(*grads);
      for (std::size_t i = 0; i < wv.size(); ++i) {
        if (wv[i].mat) *gv[i].mat += 2.0 * l2_lambda * *wv[i].mat;
      }
    }
  }
  return data_loss + l2_lambda * weight_squared_sum(weights);
}

double batch_loss(const HistoryBatch& batch, const ModelWeights& weights,
                  bool zero_environment) {
  if (static_cast<int>(batch.targets.size()) != weights.t_horizon) {
    throw ModelContractError("batch targets length != model horizon");
  }
  ModelCache cache;
  forward_batch(batch, weights, zero_environment, cache);
  const double inv_scale =
      1.0 / (static_cast<double>(weights.t_horizon) * static_cast<double>(batch.batch));
  double data_loss = 0.0;
  for (std::size_t t = 0; t < batch.targets.size(); ++t) {
    data_loss += (cache.out[t] - batch.targets[t]).squaredNorm();
  }
  return data_loss * inv_scale;
}

}  // namespace mrnav::neural
