#include "mrnav/neural/weights_io.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "mrnav/errors.hpp"

namespace mrnav::neural {
namespace {

constexpr std::array<char, 8> kMagic = {'M', 'R', 'N', 'A', 'V', 'W', 'T', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw WeightsFormatError(std::string("weights file truncated reading ") + what);
  return value;
}

void write_tensor(std::ostream& os, const std::string& name, const Mat* mat, const Vec* vec) {
  const std::uint32_t name_len = static_cast<std::uint32_t>(name.size());
  write_pod(os, name_len);
  os.write(name.data(), name_len);
  const std::int64_t rows = mat ? mat->rows() : vec->size();
  const std::int64_t cols = mat ? mat->cols() : 1;
  write_pod(os, rows);
  write_pod(os, cols);
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) {
      write_pod(os, mat ? (*mat)(r, c) : (*vec)(r));
    }
  }
}

void read_tensor(std::istream& is, const std::string& expected_name, Mat* mat, Vec* vec) {
  const auto name_len = read_pod<std::uint32_t>(is, "tensor name length");
  std::string name(name_len, '\0');
  is.read(name.data(), name_len);
  if (!is) throw WeightsFormatError("weights file truncated reading tensor name");
  if (name != expected_name) {
    throw WeightsFormatError("unexpected tensor '" + name + "', wanted '" + expected_name + "'");
  }
  const auto rows = read_pod<std::int64_t>(is, name.c_str());
  const auto cols = read_pod<std::int64_t>(is, name.c_str());
  const std::int64_t want_rows = mat ? mat->rows() : vec->size();
  const std::int64_t want_cols = mat ? mat->cols() : 1;
  if (rows != want_rows || cols != want_cols) {
    throw WeightsFormatError("tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", layer table implies " +
                             std::to_string(want_rows) + "x" + std::to_string(want_cols));
  }
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) {
      const double v = read_pod<double>(is, name.c_str());
      if (mat) {
        (*mat)(r, c) = v;
      } else {
        (*vec)(r) = v;
      }
    }
  }
}

}  // namespace

void save_weights(const ModelWeights& weights, const std::filesystem::path& path,
                  std::uint64_t provenance_hash) {
  weights.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw WeightsFormatError("cannot open weights file for writing: " + path.string());

  os.write(kMagic.data(), kMagic.size());
  write_pod(os, kVersion);
  write_pod(os, provenance_hash);
  const ModelDims dims = weights.dims();
  write_pod(os, static_cast<std::int32_t>(dims.query_hidden));
  write_pod(os, static_cast<std::int32_t>(dims.branch_hidden));
  write_pod(os, static_cast<std::int32_t>(dims.decoder_hidden));
  write_pod(os, static_cast<std::int32_t>(dims.dense_decoder));
  write_pod(os, static_cast<std::int32_t>(dims.t_obs));
  write_pod(os, static_cast<std::int32_t>(dims.t_horizon));

  ModelWeights& mutable_w = const_cast<ModelWeights&>(weights);
  const auto views = param_views(mutable_w);
  write_pod(os, static_cast<std::uint32_t>(views.size()));
  for (const auto& view : views) {
    write_tensor(os, view.name, view.mat, view.vec);
  }
  if (!os) throw WeightsFormatError("write failed: " + path.string());
}

ModelWeights load_weights(const std::filesystem::path& path, std::uint64_t* provenance_hash) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw WeightsFormatError("cannot open weights file: " + path.string());

  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) {
    throw WeightsFormatError("not a weights file (bad magic): " + path.string());
  }
  const auto version = read_pod<std::uint32_t>(is, "version");
  if (version != kVersion) {
    throw WeightsFormatError("unsupported weights version " + std::to_string(version));
  }
  const auto hash = read_pod<std::uint64_t>(is, "provenance hash");
  if (provenance_hash) *provenance_hash = hash;

  ModelDims dims;
  dims.query_hidden = read_pod<std::int32_t>(is, "query_hidden");
  dims.branch_hidden = read_pod<std::int32_t>(is, "branch_hidden");
  dims.decoder_hidden = read_pod<std::int32_t>(is, "decoder_hidden");
  dims.dense_decoder = read_pod<std::int32_t>(is, "dense_decoder");
  dims.t_obs = read_pod<std::int32_t>(is, "t_obs");
  dims.t_horizon = read_pod<std::int32_t>(is, "t_horizon");
  if (dims.query_hidden < 1 || dims.branch_hidden < 1 || dims.decoder_hidden < 1 ||
      dims.dense_decoder < 1 || dims.t_obs < 1 || dims.t_horizon < 1) {
    throw WeightsFormatError("weights file declares non-positive layer sizes");
  }

  ModelWeights weights = make_model(dims, 0);
  const auto count = read_pod<std::uint32_t>(is, "tensor count");
  auto views = param_views(weights);
  if (count != views.size()) {
    throw WeightsFormatError("weights file has " + std::to_string(count) + " tensors, expected " +
                             std::to_string(views.size()));
  }
  for (auto& view : views) {
    read_tensor(is, view.name, view.mat, view.vec);
  }
  weights.validate();
  return weights;
}

}  // namespace mrnav::neural
