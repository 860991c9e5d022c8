#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrnav/neural/lstm.hpp"
#include "mrnav/observation.hpp"
#include "mrnav/types.hpp"

namespace mrnav::neural {

struct ModelDims {
  int query_hidden = 64;    // query state encoder
  int branch_hidden = 64;   // neighbor/obstacle branch encodings (equal length)
  int decoder_hidden = 128; // recurrent decoder
  int dense_decoder = 64;   // dense decoder
  int t_obs = 20;           // observation window the model was trained with
  int t_horizon = 20;       // prediction steps emitted by forward()
};

/// All learnable parameters. The neighbor branch weights are shared across
/// every neighbor, the obstacle dense weights across every obstacle.
struct ModelWeights {
  LstmWeights query_encoder;     // 3 -> query_hidden
  LstmWeights neighbor_encoder;  // 6 -> branch_hidden
  DenseWeights obstacle_encoder; // 6 -> branch_hidden, tanh
  LstmWeights recurrent_decoder; // (query_hidden + branch_hidden) -> decoder_hidden
  DenseWeights dense_decoder;    // decoder_hidden -> dense_decoder, tanh
  DenseWeights output_layer;     // dense_decoder -> 3, linear
  int t_obs = 20;
  int t_horizon = 20;

  ModelDims dims() const;
  void validate() const;  // throws ModelContractError on inconsistent shapes
};

/// Gradients share the weight layout exactly.
using ModelGradients = ModelWeights;

ModelWeights make_model(const ModelDims& dims, std::uint64_t seed);
ModelWeights zeros_like(const ModelWeights& w);

/// Named references to every parameter tensor, in a fixed serialization order.
/// Matrices are the L2-regularized weights; vectors are the (unregularized)
/// biases.
struct ParamView {
  std::string name;
  Mat* mat = nullptr;
  Vec* vec = nullptr;
};
std::vector<ParamView> param_views(ModelWeights& w);

/// Predict t_horizon future velocities of the query robot from one
/// observation. `zero_environment` replaces the pooled environment encoding
/// with the empty-set encoding (all zeros), which is the interaction-blind
/// ablation of the same weights.
Vec3Seq forward(const ObservationHistory& history, const ModelWeights& weights,
                bool zero_environment = false);

/// Mean squared velocity error over the horizon plus L2 on weight matrices.
double loss(const Vec3Seq& predicted, const Vec3Seq& truth, const ModelWeights& weights,
            double l2_lambda);

/// Exact reverse-mode gradient of loss(forward(history), truth) w.r.t. every
/// parameter. Max pooling routes to the argmax branch (ties to the lowest
/// branch index); shared encoder gradients sum over branches.
ModelGradients backward(const ObservationHistory& history, const Vec3Seq& truth,
                        const ModelWeights& weights, double l2_lambda,
                        bool zero_environment = false, double* loss_value = nullptr);

/// One training example: an observation and the query robot's realized future
/// velocities.
struct TrainingSample {
  ObservationHistory observation;
  Vec3Seq target_velocities;
};

/// Batched sample block: all samples must share neighbor/obstacle counts and
/// history length. Columns are samples.
struct HistoryBatch {
  std::vector<Mat> ego;                     // T_O+1 of (3 x B)
  std::vector<std::vector<Mat>> neighbors;  // [branch][T_O+1] of (6 x B)
  std::vector<Mat> obstacles;               // [branch] of (6 x B)
  std::vector<Mat> targets;                 // T_H of (3 x B)
  Eigen::Index batch = 0;
};

HistoryBatch make_batch(const std::vector<const TrainingSample*>& samples);

/// Mean-over-batch data loss and its gradient, plus the L2 term.
double batch_loss_and_gradient(const HistoryBatch& batch, const ModelWeights& weights,
                               double l2_lambda, bool zero_environment,
                               ModelGradients* grads);

/// Data-term loss only (no gradient), for validation passes.
double batch_loss(const HistoryBatch& batch, const ModelWeights& weights,
                  bool zero_environment = false);

}  // namespace mrnav::neural
