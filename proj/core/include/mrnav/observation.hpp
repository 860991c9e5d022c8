#pragma once

#include "mrnav/types.hpp"

namespace mrnav {

/// Everything one robot can feed a predictor about a *query* robot at one
/// tick: the query's own recent velocities, the surrounding robots' history
/// expressed relative to the query (other minus query), and the obstacles'
/// current relative states. All history sequences run oldest-first and share
/// one length (the observation window plus the current sample).
struct ObservationHistory {
  Vec3 ego_position{Vec3::Zero()};            // query position now; integration origin
  Vec3Seq ego_velocities;                     // length T_O+1
  std::vector<Vec3Seq> neighbor_rel_positions;   // [neighbor][T_O+1]
  std::vector<Vec3Seq> neighbor_rel_velocities;  // [neighbor][T_O+1]
  Vec3Seq obstacle_rel_positions;             // [obstacle], current tick only
  Vec3Seq obstacle_rel_velocities;            // [obstacle]

  std::size_t history_length() const { return ego_velocities.size(); }
  std::size_t num_neighbors() const { return neighbor_rel_positions.size(); }
  std::size_t num_obstacles() const { return obstacle_rel_positions.size(); }

  void validate() const;  // throws ModelContractError on inconsistent shapes
};

}  // namespace mrnav
