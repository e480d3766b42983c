#include "ddc/trajectory_io.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace ddc::io {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  }
}

}  // namespace

void write_trajectories_csv(std::ostream& os, const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) throw FormatError("cannot write an empty trajectory list");
  const auto m = trajectories.front().input_dim();
  const auto p = trajectories.front().output_dim();
  os << "traj_id";
  for (Eigen::Index i = 1; i <= m; ++i) os << ",u" << i;
  for (Eigen::Index i = 1; i <= p; ++i) os << ",y" << i;
  os << '\n';
  const auto old_precision = os.precision(17);
  for (std::size_t id = 0; id < trajectories.size(); ++id) {
    const auto& t = trajectories[id];
    for (Eigen::Index k = 0; k < t.length(); ++k) {
      os << id;
      for (Eigen::Index i = 0; i < m; ++i) os << ',' << t.inputs()(i, k);
      for (Eigen::Index i = 0; i < p; ++i) os << ',' << t.outputs()(i, k);
      os << '\n';
    }
  }
  os.precision(old_precision);
}

void write_dataset_csv(std::ostream& os, const Dataset& dataset) {
  write_trajectories_csv(os, dataset.trajectories());
}

std::vector<Trajectory> read_trajectories_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.empty() || header[0] != "traj_id") throw FormatError("header must start with traj_id");
  Eigen::Index m = 0, p = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto& h = header[c];
    const bool is_u = h == "u" + std::to_string(m + 1);
    const bool is_y = h == "y" + std::to_string(p + 1);
    if (is_u && p == 0) {
      ++m;
    } else if (is_y) {
      ++p;
    } else {
      throw FormatError("unexpected header column '" + h + "'");
    }
  }
  if (m == 0 || p == 0) throw FormatError("header needs at least one u and one y column");

  std::vector<Trajectory> out;
  std::vector<std::vector<double>> rows;
  std::string current_id;
  auto flush = [&] {
    if (rows.empty()) return;
    Matrix u(m, static_cast<Eigen::Index>(rows.size()));
    Matrix y(p, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      for (Eigen::Index i = 0; i < m; ++i) u(i, static_cast<Eigen::Index>(k)) = rows[k][static_cast<std::size_t>(i)];
      for (Eigen::Index i = 0; i < p; ++i) y(i, static_cast<Eigen::Index>(k)) = rows[k][static_cast<std::size_t>(m + i)];
    }
    out.emplace_back(std::move(u), std::move(y));
    rows.clear();
  };
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    if (fields[0] != current_id) {
      flush();
      current_id = fields[0];
    }
    std::vector<double> values;
    values.reserve(fields.size() - 1);
    for (std::size_t c = 1; c < fields.size(); ++c) values.push_back(parse_double(fields[c], line_no));
    rows.push_back(std::move(values));
  }
  flush();
  if (out.empty()) throw FormatError("CSV contains no samples");
  return out;
}

Dataset read_dataset_csv(std::istream& is, Eigen::Index depth) {
  return Dataset(read_trajectories_csv(is), depth);
}

nlohmann::json to_json(const Trajectory& t) {
  nlohmann::json inputs = nlohmann::json::array();
  nlohmann::json outputs = nlohmann::json::array();
  for (Eigen::Index k = 0; k < t.length(); ++k) {
    inputs.push_back(std::vector<double>(t.inputs().col(k).begin(), t.inputs().col(k).end()));
    outputs.push_back(std::vector<double>(t.outputs().col(k).begin(), t.outputs().col(k).end()));
  }
  return {{"inputs", inputs}, {"outputs", outputs}};
}

nlohmann::json to_json(const Dataset& d) {
  nlohmann::json trajs = nlohmann::json::array();
  for (const auto& t : d.trajectories()) trajs.push_back(to_json(t));
  return {{"depth", d.depth()}, {"trajectories", trajs}};
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  try {
    const auto& in = j.at("inputs");
    const auto& outp = j.at("outputs");
    if (!in.is_array() || !outp.is_array() || in.empty() || in.size() != outp.size()) {
      throw FormatError("trajectory: inputs/outputs must be equal-length nonempty arrays");
    }
    const auto T = static_cast<Eigen::Index>(in.size());
    const auto m = static_cast<Eigen::Index>(in.at(0).size());
    const auto p = static_cast<Eigen::Index>(outp.at(0).size());
    Matrix u(m, T), y(p, T);
    for (Eigen::Index k = 0; k < T; ++k) {
      const auto& uk = in.at(static_cast<std::size_t>(k));
      const auto& yk = outp.at(static_cast<std::size_t>(k));
      if (static_cast<Eigen::Index>(uk.size()) != m || static_cast<Eigen::Index>(yk.size()) != p) {
        throw FormatError("trajectory: ragged sample vectors");
      }
      for (Eigen::Index i = 0; i < m; ++i) u(i, k) = uk.at(static_cast<std::size_t>(i)).get<double>();
      for (Eigen::Index i = 0; i < p; ++i) y(i, k) = yk.at(static_cast<std::size_t>(i)).get<double>();
    }
    return Trajectory(std::move(u), std::move(y));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("trajectory JSON: ") + e.what());
  }
}

Dataset dataset_from_json(const nlohmann::json& j) {
  try {
    std::vector<Trajectory> trajs;
    for (const auto& t : j.at("trajectories")) trajs.push_back(trajectory_from_json(t));
    return Dataset(std::move(trajs), j.at("depth").get<Eigen::Index>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dataset JSON: ") + e.what());
  }
}

}  // namespace ddc::io
