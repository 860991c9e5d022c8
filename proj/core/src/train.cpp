#include "mrnav/neural/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "mrnav/errors.hpp"

namespace mrnav::neural {
namespace {

struct AdamState {
  ModelGradients m;
  ModelGradients v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(const ModelWeights& w) : m(zeros_like(w)), v(zeros_like(w)) {}

  void update(ModelWeights& w, ModelGradients& g, double lr) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    auto wv = param_views(w);
    auto gv = param_views(g);
    auto mv = param_views(m);
    auto vv = param_views(v);
    for (std::size_t i = 0; i < wv.size(); ++i) {
      auto apply = [&](auto& wt, const auto& gt, auto& mt, auto& vt) {
        mt = beta1 * mt + (1.0 - beta1) * gt;
        vt = (beta2 * vt.array() + (1.0 - beta2) * gt.array().square()).matrix();
        wt.array() -= lr * (mt.array() / bc1) / ((vt.array() / bc2).sqrt() + eps);
      };
      if (wv[i].mat) {
        apply(*wv[i].mat, *gv[i].mat, *mv[i].mat, *vv[i].mat);
      } else {
        apply(*wv[i].vec, *gv[i].vec, *mv[i].vec, *vv[i].vec);
      }
    }
  }
};

void zero_grads(ModelGradients& g) {
  for (auto& view : param_views(g)) {
    if (view.mat) {
      view.mat->setZero();
    } else {
      view.vec->setZero();
    }
  }
}

std::vector<HistoryBatch> build_batches(std::span<const TrainingSample> samples,
                                        const std::vector<std::size_t>& order, int batch_size) {
  std::vector<HistoryBatch> batches;
  std::vector<const TrainingSample*> block;
  for (std::size_t idx : order) {
    block.push_back(&samples[idx]);
    if (static_cast<int>(block.size()) == batch_size) {
      batches.push_back(make_batch(block));
      block.clear();
    }
  }
  if (!block.empty()) batches.push_back(make_batch(block));
  return batches;
}

TrainResult run_training(std::span<const TrainingSample> samples, ModelWeights weights,
                         const TrainConfig& cfg) {
  if (samples.empty()) throw std::invalid_argument("train: dataset is empty");
  if (cfg.batch_size < 1 || cfg.epochs < 1) {
    throw std::invalid_argument("train: batch_size and epochs must be >= 1");
  }
  weights.validate();

  const std::size_t n = samples.size();
  std::size_t n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction *
                                                          static_cast<double>(n)));
  n_val = std::min(n_val, n - 1);
  const std::size_t n_train = n - n_val;

  std::vector<std::size_t> train_order(n_train);
  std::iota(train_order.begin(), train_order.end(), 0u);

  std::vector<HistoryBatch> val_batches;
  if (n_val > 0) {
    std::vector<std::size_t> val_order(n_val);
    std::iota(val_order.begin(), val_order.end(), n_train);
    val_batches = build_batches(samples, val_order, cfg.batch_size);
  }

  auto validation_loss = [&](const ModelWeights& w) {
    if (val_batches.empty()) return std::numeric_limits<double>::quiet_NaN();
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& batch : val_batches) {
      total += batch_loss(batch, w, cfg.zero_environment) * static_cast<double>(batch.batch);
      count += static_cast<std::size_t>(batch.batch);
    }
    return total / static_cast<double>(count);
  };

  std::mt19937_64 rng(cfg.rng_seed);
  AdamState adam(weights);
  ModelGradients grads = zeros_like(weights);

  TrainResult result;
  result.weights = weights;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(train_order.begin(), train_order.end(), rng);
    const auto batches = build_batches(samples, train_order, cfg.batch_size);

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : batches) {
      zero_grads(grads);
      const double batch_value =
          batch_loss_and_gradient(batch, weights, cfg.l2_lambda, cfg.zero_environment, &grads);
      if (!std::isfinite(batch_value)) {
        throw TrainingDivergedError("train: non-finite loss", epoch - 1);
      }
      epoch_loss += batch_value * static_cast<double>(batch.batch);
      seen += static_cast<std::size_t>(batch.batch);
      adam.update(weights, grads, cfg.learning_rate);
    }
    epoch_loss /= static_cast<double>(seen);
    const double val = validation_loss(weights);
    if (n_val > 0 && !std::isfinite(val)) {
      throw TrainingDivergedError("train: non-finite validation loss", epoch - 1);
    }
    result.train_loss.push_back(epoch_loss);
    result.val_loss.push_back(val);

    const double monitored = n_val > 0 ? val : epoch_loss;
    if (monitored < best_val) {
      best_val = monitored;
      best_epoch = epoch;
      result.weights = weights;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  result.best_epoch = best_epoch;
  return result;
}

}  // namespace

TrainResult train(std::span<const TrainingSample> samples, const ModelDims& dims,
                  const TrainConfig& cfg) {
  return run_training(samples, make_model(dims, cfg.rng_seed), cfg);
}

TrainResult train_from(std::span<const TrainingSample> samples, const ModelWeights& initial,
                       const TrainConfig& cfg) {
  return run_training(samples, initial, cfg);
}

}  // namespace mrnav::neural
