#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mrnav/neural/model.hpp"

namespace mrnav::neural {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 64;
  int epochs = 200;
  double l2_lambda = 0.01;
  // 0 means full-sequence backpropagation through time; the windows here are
  // short enough that no truncation is needed.
  int truncation_depth = 0;
  std::uint64_t rng_seed = 1;
  double validation_fraction = 0.1;  // final time block, never shuffled in
  int patience = 20;                 // early stop epochs without val improvement
  bool zero_environment = false;     // train the interaction-blind ablation
};

struct TrainResult {
  ModelWeights weights;            // parameters with the lowest validation loss
  std::vector<double> train_loss;  // per epoch (data + L2 term)
  std::vector<double> val_loss;    // per epoch (data term)
  int best_epoch = 0;              // 0-based index into the loss curves
};

/// Minibatch gradient descent with adaptive moments on the data in order:
/// the validation block is the trailing fraction of `samples` (callers keep
/// records in simulation-time order so validation windows never overlap
/// training windows). Deterministic for a fixed rng_seed. Throws
/// TrainingDivergedError when the loss stops being finite.
TrainResult train(std::span<const TrainingSample> samples, const ModelDims& dims,
                  const TrainConfig& cfg);

/// Same, continuing from existing weights instead of a fresh initialization.
TrainResult train_from(std::span<const TrainingSample> samples, const ModelWeights& initial,
                       const TrainConfig& cfg);

}  // namespace mrnav::neural
