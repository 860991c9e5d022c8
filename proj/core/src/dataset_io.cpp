#include <array>
#include <fstream>

#include "mrnav/datagen.hpp"
#include "mrnav/errors.hpp"

namespace mrnav {
namespace {

constexpr std::array<char, 8> kMagic = {'M', 'R', 'N', 'A', 'V', 'D', 'S', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw DatasetFormatError(std::string("dataset file truncated reading ") + what);
  return value;
}

void write_vec3(std::ostream& os, const Vec3& v) {
  write_pod(os, v(0));
  write_pod(os, v(1));
  write_pod(os, v(2));
}

Vec3 read_vec3(std::istream& is, const char* what) {
  Vec3 v;
  v(0) = read_pod<double>(is, what);
  v(1) = read_pod<double>(is, what);
  v(2) = read_pod<double>(is, what);
  return v;
}

void write_seq(std::ostream& os, const Vec3Seq& seq) {
  for (const auto& v : seq) write_vec3(os, v);
}

Vec3Seq read_seq(std::istream& is, std::size_t count, const char* what) {
  Vec3Seq seq;
  seq.reserve(count);
  for (std::size_t i = 0; i < count; ++i) seq.push_back(read_vec3(is, what));
  return seq;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DatasetFormatError("cannot open dataset file for writing: " + path.string());

  os.write(kMagic.data(), kMagic.size());
  write_pod(os, kVersion);
  write_pod(os, dataset.provenance_hash);
  write_pod(os, static_cast<std::int32_t>(dataset.n_neighbors));
  write_pod(os, static_cast<std::int32_t>(dataset.n_obstacles));
  write_pod(os, static_cast<std::int32_t>(dataset.t_obs));
  write_pod(os, static_cast<std::int32_t>(dataset.t_horizon));
  write_pod(os, dataset.dt);
  write_pod(os, static_cast<std::uint64_t>(dataset.records.size()));

  const std::size_t window = static_cast<std::size_t>(dataset.t_obs) + 1;
  for (const auto& rec : dataset.records) {
    if (rec.observation.history_length() != window ||
        rec.observation.num_neighbors() != static_cast<std::size_t>(dataset.n_neighbors) ||
        rec.observation.num_obstacles() != static_cast<std::size_t>(dataset.n_obstacles) ||
        rec.future_velocities.size() != static_cast<std::size_t>(dataset.t_horizon)) {
      throw DatasetFormatError("dataset record shapes disagree with the header");
    }
    write_pod(os, rec.robot_id);
    write_pod(os, rec.tick);
    write_vec3(os, rec.observation.ego_position);
    write_seq(os, rec.observation.ego_velocities);
    for (int r = 0; r < dataset.n_neighbors; ++r) {
      write_seq(os, rec.observation.neighbor_rel_positions[static_cast<std::size_t>(r)]);
      write_seq(os, rec.observation.neighbor_rel_velocities[static_cast<std::size_t>(r)]);
    }
    for (int o = 0; o < dataset.n_obstacles; ++o) {
      write_vec3(os, rec.observation.obstacle_rel_positions[static_cast<std::size_t>(o)]);
      write_vec3(os, rec.observation.obstacle_rel_velocities[static_cast<std::size_t>(o)]);
    }
    write_seq(os, rec.future_velocities);
  }
  if (!os) throw DatasetFormatError("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DatasetFormatError("cannot open dataset file: " + path.string());

  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) {
    throw DatasetFormatError("not a dataset file (bad magic): " + path.string());
  }
  const auto version = read_pod<std::uint32_t>(is, "version");
  if (version != kVersion) {
    throw DatasetFormatError("unsupported dataset version " + std::to_string(version));
  }

  Dataset ds;
  ds.provenance_hash = read_pod<std::uint64_t>(is, "provenance hash");
  ds.n_neighbors = read_pod<std::int32_t>(is, "n_neighbors");
  ds.n_obstacles = read_pod<std::int32_t>(is, "n_obstacles");
  ds.t_obs = read_pod<std::int32_t>(is, "t_obs");
  ds.t_horizon = read_pod<std::int32_t>(is, "t_horizon");
  ds.dt = read_pod<double>(is, "dt");
  const auto count = read_pod<std::uint64_t>(is, "record count");
  if (ds.n_neighbors < 0 || ds.n_obstacles < 0 || ds.t_obs < 1 || ds.t_horizon < 1 ||
      ds.dt <= 0.0) {
    throw DatasetFormatError("dataset header is inconsistent");
  }

  const std::size_t window = static_cast<std::size_t>(ds.t_obs) + 1;
  ds.records.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    DatasetRecord rec;
    rec.robot_id = read_pod<std::int32_t>(is, "robot id");
    rec.tick = read_pod<std::int64_t>(is, "tick");
    rec.observation.ego_position = read_vec3(is, "ego position");
    rec.observation.ego_velocities = read_seq(is, window, "ego velocities");
    rec.observation.neighbor_rel_positions.resize(static_cast<std::size_t>(ds.n_neighbors));
    rec.observation.neighbor_rel_velocities.resize(static_cast<std::size_t>(ds.n_neighbors));
    for (int r = 0; r < ds.n_neighbors; ++r) {
      rec.observation.neighbor_rel_positions[static_cast<std::size_t>(r)] =
          read_seq(is, window, "neighbor positions");
      rec.observation.neighbor_rel_velocities[static_cast<std::size_t>(r)] =
          read_seq(is, window, "neighbor velocities");
    }
    for (int o = 0; o < ds.n_obstacles; ++o) {
      rec.observation.obstacle_rel_positions.push_back(read_vec3(is, "obstacle position"));
      rec.observation.obstacle_rel_velocities.push_back(read_vec3(is, "obstacle velocity"));
    }
    rec.future_velocities =
        read_seq(is, static_cast<std::size_t>(ds.t_horizon), "future velocities");
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace mrnav
