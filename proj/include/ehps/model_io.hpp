#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "ehps/body_model.hpp"
#include "ehps/errors.hpp"

namespace ehps {

namespace detail {

inline nlohmann::ordered_json points_to_json(const Points& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    rows.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return rows;
}

// blend dirs are stored 3V x C but serialized V x 3 x C
inline nlohmann::ordered_json dirs_to_json(const Eigen::MatrixXd& dirs) {
  const Eigen::Index v = dirs.rows() / 3;
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v; ++i) {
    nlohmann::ordered_json vertex = nlohmann::ordered_json::array();
    for (int c = 0; c < 3; ++c) {
      nlohmann::ordered_json comps = nlohmann::ordered_json::array();
      for (Eigen::Index b = 0; b < dirs.cols(); ++b) comps.push_back(dirs(3 * i + c, b));
      vertex.push_back(std::move(comps));
    }
    out.push_back(std::move(vertex));
  }
  return out;
}

inline nlohmann::ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename Json>
Points points_from_json(const Json& rows, const std::string& path) {
  if (!rows.is_array()) throw validation_error(path + ": expected array");
  Points out(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (!row.is_array() || row.size() != 3)
      throw validation_error(path + "[" + std::to_string(i) + "]: expected 3 numbers");
    for (int c = 0; c < 3; ++c) {
      if (!row[static_cast<std::size_t>(c)].is_number())
        throw validation_error(path + "[" + std::to_string(i) + "]: expected 3 numbers");
      out(static_cast<Eigen::Index>(i), c) = row[static_cast<std::size_t>(c)].template get<double>();
    }
  }
  return out;
}

template <typename Json>
Eigen::MatrixXd matrix_from_json(const Json& rows, Eigen::Index cols_expected,
                                 const std::string& path) {
  if (!rows.is_array()) throw validation_error(path + ": expected array");
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd out(r, cols_expected);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols_expected)
      throw validation_error(path + "[" + std::to_string(i) + "]: expected " +
                             std::to_string(cols_expected) + " numbers");
    for (Eigen::Index j = 0; j < cols_expected; ++j)
      out(i, j) = row[static_cast<std::size_t>(j)].template get<double>();
  }
  return out;
}

template <typename Json>
Eigen::MatrixXd dirs_from_json(const Json& data, Eigen::Index vertices, Eigen::Index coeffs,
                               const std::string& path) {
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != vertices)
    throw validation_error(path + ": expected " + std::to_string(vertices) + " vertex entries");
  Eigen::MatrixXd out(3 * vertices, coeffs);
  for (Eigen::Index i = 0; i < vertices; ++i) {
    const auto& vertex = data[static_cast<std::size_t>(i)];
    if (!vertex.is_array() || vertex.size() != 3)
      throw validation_error(path + "[" + std::to_string(i) + "]: expected 3 components");
    for (int c = 0; c < 3; ++c) {
      const auto& comps = vertex[static_cast<std::size_t>(c)];
      if (!comps.is_array() || static_cast<Eigen::Index>(comps.size()) != coeffs)
        throw validation_error(path + "[" + std::to_string(i) + "][" + std::to_string(c) +
                               "]: expected " + std::to_string(coeffs) + " coefficients");
      for (Eigen::Index b = 0; b < coeffs; ++b)
        out(3 * i + c, b) = comps[static_cast<std::size_t>(b)].template get<double>();
    }
  }
  return out;
}

}  // namespace detail

inline nlohmann::ordered_json model_to_json(const BodyModelData& model) {
  nlohmann::ordered_json j;
  j["template_vertices"] = detail::points_to_json(model.template_vertices);
  j["shape_dirs"] = detail::dirs_to_json(model.shape_dirs);
  j["expr_dirs"] = detail::dirs_to_json(model.expr_dirs);
  j["joint_regressor"] = detail::matrix_to_json(model.joint_regressor);
  j["skin_weights"] = detail::matrix_to_json(model.skin_weights);
  nlohmann::ordered_json parents = nlohmann::ordered_json::array();
  for (int p : model.tree.parents) {
    if (p == KinematicTree::kNoParent)
      parents.push_back(nullptr);
    else
      parents.push_back(p);
  }
  j["parents"] = std::move(parents);
  nlohmann::ordered_json parts = nlohmann::ordered_json::array();
  for (BodyPart p : model.tree.part_of_joint) parts.push_back(to_string(p));
  j["part_of_joint"] = std::move(parts);
  nlohmann::ordered_json masks;  // std::map keeps keys sorted already
  for (const auto& [name, mask] : model.part_vertex_masks) masks[name] = mask;
  j["part_vertex_masks"] = std::move(masks);
  j["wrist_joints"] = {{"left", model.left_wrist}, {"right", model.right_wrist}};
  j["pelvis_joint"] = model.pelvis_joint;
  j["units"] = "m";
  return j;
}

inline BodyModelData model_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw validation_error("model: expected JSON object");
  for (const char* key : {"template_vertices", "shape_dirs", "expr_dirs", "joint_regressor",
                          "skin_weights", "parents", "part_of_joint", "part_vertex_masks",
                          "wrist_joints", "pelvis_joint", "units"})
    if (!j.contains(key)) throw validation_error(std::string("model: missing key '") + key + "'");
  if (j.at("units").get<std::string>() != "m")
    throw validation_error("units: expected \"m\"");

  BodyModelData model;
  model.template_vertices = detail::points_from_json(j.at("template_vertices"), "template_vertices");
  const Eigen::Index v = model.template_vertices.rows();
  model.shape_dirs = detail::dirs_from_json(j.at("shape_dirs"), v, kShapeCoeffs, "shape_dirs");
  model.expr_dirs = detail::dirs_from_json(j.at("expr_dirs"), v, kExprCoeffs, "expr_dirs");
  model.joint_regressor = detail::matrix_from_json(j.at("joint_regressor"), v, "joint_regressor");
  const auto& parents = j.at("parents");
  if (!parents.is_array()) throw validation_error("parents: expected array");
  for (std::size_t i = 0; i < parents.size(); ++i) {
    const auto& p = parents[i];
    if (p.is_null())
      model.tree.parents.push_back(KinematicTree::kNoParent);
    else if (p.is_number_integer())
      model.tree.parents.push_back(p.get<int>());
    else
      throw validation_error("parents[" + std::to_string(i) + "]: expected integer or null");
  }
  model.skin_weights = detail::matrix_from_json(
      j.at("skin_weights"), static_cast<Eigen::Index>(model.tree.parents.size()), "skin_weights");
  const auto& parts = j.at("part_of_joint");
  if (!parts.is_array() || parts.size() != parents.size())
    throw validation_error("part_of_joint: expected one label per joint");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    try {
      model.tree.part_of_joint.push_back(body_part_from_string(parts[i].get<std::string>()));
    } catch (const validation_error& e) {
      throw validation_error("part_of_joint[" + std::to_string(i) + "]: " + e.what());
    }
  }
  const auto& masks = j.at("part_vertex_masks");
  if (!masks.is_object()) throw validation_error("part_vertex_masks: expected object");
  for (const auto& [name, mask] : masks.items()) {
    if (!mask.is_array())
      throw validation_error("part_vertex_masks." + name + ": expected array");
    model.part_vertex_masks[name] = mask.template get<std::vector<int>>();
  }
  const auto& wrists = j.at("wrist_joints");
  if (!wrists.is_object() || !wrists.contains("left") || !wrists.contains("right"))
    throw validation_error("wrist_joints: expected {left, right}");
  model.left_wrist = wrists.at("left").get<int>();
  model.right_wrist = wrists.at("right").get<int>();
  model.pelvis_joint = j.at("pelvis_joint").get<int>();

  validate_model(model);
  return model;
}

/// Serializes with a fixed key order and shortest round-trip float encoding,
/// so save -> load -> save is byte-identical.
inline void save_model(const BodyModelData& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open '" + path + "'");
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw std::runtime_error("save_model: write failed for '" + path + "'");
}

inline BodyModelData load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("load_model: cannot open '" + path + "'");
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw validation_error("load_model: " + std::string(e.what()));
  }
  try {
    return model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error("load_model: " + std::string(e.what()));
  }
}

}  // namespace ehps
