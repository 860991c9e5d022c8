#pragma once

#include <stdexcept>
#include <string>

namespace mrnav {

struct InvalidGeometryError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// QP/SQP failure; carries iteration diagnostics in the message.
struct SolverError : std::runtime_error {
  SolverError(const std::string& msg, int iterations, double primal_residual,
              double dual_residual)
      : std::runtime_error(msg),
        iterations(iterations),
        primal_residual(primal_residual),
        dual_residual(dual_residual) {}
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

/// Input shapes do not match the model's declared layer sizes.
struct ModelContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Weight file is truncated, has a bad magic/version, or mismatched shapes.
struct WeightsFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Training loss became non-finite; `last_finite_epoch` is the last usable one.
struct TrainingDivergedError : std::runtime_error {
  TrainingDivergedError(const std::string& msg, int last_finite_epoch)
      : std::runtime_error(msg), last_finite_epoch(last_finite_epoch) {}
  int last_finite_epoch = -1;
};

}  // namespace mrnav
