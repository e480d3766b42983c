#pragma once

// Trajectory/Dataset serialization.
//
// CSV: one row per time step, header `traj_id,u1,...,um,y1,...,yp`. Rows of
// one trajectory are contiguous and in time order; trajectory ids appear in
// dataset order. Values are written with 17 significant digits so a
// write/read cycle is exact.
//
// JSON mirror:
//   {"depth": L, "trajectories": [{"inputs": [[u_0...], ...], "outputs": [[y_0...], ...]}]}
// where each inner array is one sample vector.

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "ddc/behavior.hpp"

namespace ddc::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_trajectories_csv(std::ostream& os, const std::vector<Trajectory>& trajectories);
void write_dataset_csv(std::ostream& os, const Dataset& dataset);

/// Throws FormatError on a malformed header, ragged rows or non-numeric fields.
std::vector<Trajectory> read_trajectories_csv(std::istream& is);
Dataset read_dataset_csv(std::istream& is, Eigen::Index depth);

nlohmann::json to_json(const Trajectory& trajectory);
nlohmann::json to_json(const Dataset& dataset);
Trajectory trajectory_from_json(const nlohmann::json& j);
Dataset dataset_from_json(const nlohmann::json& j);

}  // namespace ddc::io
