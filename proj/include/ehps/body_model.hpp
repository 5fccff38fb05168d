#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehps/errors.hpp"
#include "ehps/rng.hpp"

namespace ehps {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3>;  // one point per row, meters

enum class BodyPart { Root, Body, Jaw, Eye, LeftHand, RightHand };

inline const char* to_string(BodyPart p) {
  switch (p) {
    case BodyPart::Root: return "root";
    case BodyPart::Body: return "body";
    case BodyPart::Jaw: return "jaw";
    case BodyPart::Eye: return "eye";
    case BodyPart::LeftHand: return "left_hand";
    case BodyPart::RightHand: return "right_hand";
  }
  return "?";
}

inline BodyPart body_part_from_string(const std::string& s) {
  if (s == "root") return BodyPart::Root;
  if (s == "body") return BodyPart::Body;
  if (s == "jaw") return BodyPart::Jaw;
  if (s == "eye") return BodyPart::Eye;
  if (s == "left_hand") return BodyPart::LeftHand;
  if (s == "right_hand") return BodyPart::RightHand;
  throw validation_error("unknown body part label '" + s + "'");
}

/// Skeleton topology. parents[j] == kNoParent marks the root; every other
/// joint's parent index is strictly smaller than its own (topological order).
struct KinematicTree {
  static constexpr int kNoParent = -1;

  std::vector<int> parents;
  std::vector<BodyPart> part_of_joint;

  int joint_count() const { return static_cast<int>(parents.size()); }

  std::vector<int> joints_of(BodyPart part) const {
    std::vector<int> out;
    for (int j = 0; j < joint_count(); ++j)
      if (part_of_joint[static_cast<std::size_t>(j)] == part) out.push_back(j);
    return out;
  }
};

constexpr int kCanonicalJoints = 55;
constexpr int kHandJoints = 15;  // per side in the canonical layout
constexpr int kShapeCoeffs = 10;
constexpr int kExprCoeffs = 10;

/// Canonical 55-joint parent table: global pelvis, 21 body joints, jaw,
/// two eyes, 15 joints per hand, in that index order.
inline const std::array<int, kCanonicalJoints>& canonical_parents() {
  static const std::array<int, kCanonicalJoints> table = {
      KinematicTree::kNoParent,
      0,  0,  0,  1,  2,  3,  4,  5,  6,  7,  8,  9,  9,  9,  12, 13, 14, 16, 17, 18, 19,
      15, 15, 15,
      20, 25, 26, 20, 28, 29, 20, 31, 32, 20, 34, 35, 20, 37, 38,
      21, 40, 41, 21, 43, 44, 21, 46, 47, 21, 49, 50, 21, 52, 53};
  return table;
}

constexpr int kLeftWrist = 20;
constexpr int kRightWrist = 21;
constexpr int kJawJoint = 22;
constexpr int kLeftHandStart = 25;
constexpr int kRightHandStart = 40;

inline KinematicTree canonical_tree() {
  KinematicTree tree;
  tree.parents.assign(canonical_parents().begin(), canonical_parents().end());
  tree.part_of_joint.resize(kCanonicalJoints, BodyPart::Body);
  tree.part_of_joint[0] = BodyPart::Root;
  tree.part_of_joint[kJawJoint] = BodyPart::Jaw;
  tree.part_of_joint[23] = BodyPart::Eye;
  tree.part_of_joint[24] = BodyPart::Eye;
  for (int j = kLeftHandStart; j < kLeftHandStart + kHandJoints; ++j)
    tree.part_of_joint[static_cast<std::size_t>(j)] = BodyPart::LeftHand;
  for (int j = kRightHandStart; j < kRightHandStart + kHandJoints; ++j)
    tree.part_of_joint[static_cast<std::size_t>(j)] = BodyPart::RightHand;
  return tree;
}

/// Parametric body model data: rest template, shape/expression blend bases,
/// joint regressor, skinning weights and skeleton. Vertices and joints are in
/// meters. Blend bases are stored flattened (3V x 10) with row index 3*v + c.
struct BodyModelData {
  Points template_vertices;      // V x 3
  Eigen::MatrixXd shape_dirs;    // 3V x 10, meters per unit beta
  Eigen::MatrixXd expr_dirs;     // 3V x 10, meters per unit psi
  Eigen::MatrixXd joint_regressor;  // J x V, row-stochastic
  Eigen::MatrixXd skin_weights;     // V x J, row-stochastic
  KinematicTree tree;
  std::map<std::string, std::vector<int>> part_vertex_masks;  // at least left_hand, right_hand, face, all
  int left_wrist = -1;
  int right_wrist = -1;
  int pelvis_joint = -1;

  int vertex_count() const { return static_cast<int>(template_vertices.rows()); }
  int joint_count() const { return tree.joint_count(); }

  const std::vector<int>& mask(const std::string& name) const {
    auto it = part_vertex_masks.find(name);
    if (it == part_vertex_masks.end() || it->second.empty())
      throw std::invalid_argument("model has no vertex mask '" + name + "'");
    return it->second;
  }
};

/// One annotated or predicted body: per-joint axis-angle pose, shape and
/// expression coefficients, global translation.
struct FullPoseState {
  Eigen::Matrix<double, Eigen::Dynamic, 3> theta;  // J x 3 axis-angle, radians
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(kShapeCoeffs);
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(kExprCoeffs);
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static FullPoseState zero(int joints) {
    FullPoseState s;
    s.theta = Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(joints, 3);
    return s;
  }
};

struct MeshResult {
  Points vertices;  // V x 3
  Points joints;    // J x 3
};

namespace detail {

inline void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const std::string& what) {
  if (!m.allFinite()) throw validation_error(what + ": non-finite value");
}

}  // namespace detail

/// Axis-angle to rotation matrix. Angles below 1e-8 rad use the second-order
/// series expansion.
inline Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis_angle) {
  if (!axis_angle.allFinite()) throw std::invalid_argument("rodrigues: non-finite axis-angle");
  const double angle = axis_angle.norm();
  Eigen::Matrix3d cross;
  cross << 0, -axis_angle.z(), axis_angle.y(),
      axis_angle.z(), 0, -axis_angle.x(),
      -axis_angle.y(), axis_angle.x(), 0;
  if (angle < 1e-8) {
    return Eigen::Matrix3d::Identity() + cross + 0.5 * (cross * cross);
  }
  const double s = std::sin(angle) / angle;
  const double c = (1.0 - std::cos(angle)) / (angle * angle);
  return Eigen::Matrix3d::Identity() + s * cross + c * (cross * cross);
}

/// Rest-pose vertices under shape and expression coefficients:
/// template + shape_dirs * beta + expr_dirs * psi.
inline Points shape_mesh(const BodyModelData& model, const Eigen::VectorXd& beta,
                         const Eigen::VectorXd& psi) {
  if (beta.size() != kShapeCoeffs)
    throw std::invalid_argument("shape_mesh: beta must have " + std::to_string(kShapeCoeffs) +
                                " coefficients, got " + std::to_string(beta.size()));
  if (psi.size() != kExprCoeffs)
    throw std::invalid_argument("shape_mesh: psi must have " + std::to_string(kExprCoeffs) +
                                " coefficients, got " + std::to_string(psi.size()));
  const int v = model.vertex_count();
  Eigen::VectorXd offset = model.shape_dirs * beta + model.expr_dirs * psi;
  Points out = model.template_vertices;
  for (int i = 0; i < v; ++i)
    out.row(i) += Eigen::RowVector3d(offset[3 * i], offset[3 * i + 1], offset[3 * i + 2]);
  return out;
}

/// Rest joints from rest vertices via the row-stochastic regressor.
inline Points regress_joints(const BodyModelData& model, const Points& rest_vertices) {
  if (rest_vertices.rows() != model.joint_regressor.cols())
    throw std::invalid_argument("regress_joints: vertex count " +
                                std::to_string(rest_vertices.rows()) + " does not match regressor columns " +
                                std::to_string(model.joint_regressor.cols()));
  return model.joint_regressor * rest_vertices;
}

/// World transform per joint. Root carries (rodrigues(theta_0), rest_joint_0);
/// each child composes its parent's world transform with a local transform
/// whose rotation is rodrigues(theta_j) and translation is the rest-pose bone
/// vector to the parent.
inline std::vector<Eigen::Matrix4d> forward_kinematics(
    const KinematicTree& tree, const Points& rest_joints,
    const Eigen::Matrix<double, Eigen::Dynamic, 3>& theta) {
  const int joints = tree.joint_count();
  if (theta.rows() != joints)
    throw std::invalid_argument("forward_kinematics: theta rows " + std::to_string(theta.rows()) +
                                " != joint count " + std::to_string(joints));
  if (rest_joints.rows() != joints)
    throw std::invalid_argument("forward_kinematics: rest_joints rows " +
                                std::to_string(rest_joints.rows()) + " != joint count " +
                                std::to_string(joints));
  std::vector<Eigen::Matrix4d> world(static_cast<std::size_t>(joints));
  for (int j = 0; j < joints; ++j) {
    const int parent = tree.parents[static_cast<std::size_t>(j)];
    if (parent >= j || (parent < 0 && parent != KinematicTree::kNoParent))
      throw std::invalid_argument("forward_kinematics: joint " + std::to_string(j) +
                                  " violates topological parent order");
    Eigen::Matrix4d local = Eigen::Matrix4d::Identity();
    local.topLeftCorner<3, 3>() = rodrigues(theta.row(j).transpose());
    if (parent == KinematicTree::kNoParent) {
      if (j != 0 && tree.parents[0] == KinematicTree::kNoParent)
        throw std::invalid_argument("forward_kinematics: multiple roots");
      local.topRightCorner<3, 1>() = rest_joints.row(j).transpose();
      world[static_cast<std::size_t>(j)] = local;
    } else {
      local.topRightCorner<3, 1>() =
          (rest_joints.row(j) - rest_joints.row(parent)).transpose();
      world[static_cast<std::size_t>(j)] = world[static_cast<std::size_t>(parent)] * local;
    }
  }
  return world;
}

/// Linear blend skinning. Per joint the relative transform maps rest-frame
/// points (world_transform composed with translate(-rest_joint)); each vertex
/// is the skin-weighted blend of those transforms applied to it.
inline Points skin(const BodyModelData& model, const Points& rest_vertices,
                   const Points& rest_joints, const std::vector<Eigen::Matrix4d>& world_transforms) {
  const int v = model.vertex_count();
  const int joints = model.joint_count();
  if (rest_vertices.rows() != v || rest_joints.rows() != joints ||
      static_cast<int>(world_transforms.size()) != joints)
    throw std::invalid_argument("skin: inconsistent shapes");
  for (int i = 0; i < v; ++i) {
    const double sum = model.skin_weights.row(i).sum();
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("skin: weight row " + std::to_string(i) + " sums to " +
                                  std::to_string(sum));
  }
  std::vector<Eigen::Matrix<double, 3, 4>> relative(static_cast<std::size_t>(joints));
  for (int j = 0; j < joints; ++j) {
    const auto& w = world_transforms[static_cast<std::size_t>(j)];
    relative[static_cast<std::size_t>(j)].leftCols<3>() = w.topLeftCorner<3, 3>();
    relative[static_cast<std::size_t>(j)].col(3) =
        w.topRightCorner<3, 1>() - w.topLeftCorner<3, 3>() * rest_joints.row(j).transpose();
  }
  Points out(v, 3);
  for (int i = 0; i < v; ++i) {
    Eigen::Matrix<double, 3, 4> blend = Eigen::Matrix<double, 3, 4>::Zero();
    for (int j = 0; j < joints; ++j) {
      const double w = model.skin_weights(i, j);
      if (w != 0.0) blend += w * relative[static_cast<std::size_t>(j)];
    }
    out.row(i) =
        (blend.leftCols<3>() * rest_vertices.row(i).transpose() + blend.col(3)).transpose();
  }
  return out;
}

/// Full forward pass: shape -> regress -> forward kinematics -> skin, then the
/// global translation added to both vertices and posed joint positions.
inline MeshResult forward(const BodyModelData& model, const FullPoseState& state) {
  if (state.theta.rows() != model.joint_count())
    throw std::invalid_argument("forward: state has " + std::to_string(state.theta.rows()) +
                                " joints, model has " + std::to_string(model.joint_count()));
  detail::require_finite(state.theta, "forward: theta");
  detail::require_finite(state.beta, "forward: beta");
  detail::require_finite(state.psi, "forward: psi");
  detail::require_finite(state.translation, "forward: translation");
  const Points rest = shape_mesh(model, state.beta, state.psi);
  const Points rest_joints = regress_joints(model, rest);
  const auto world = forward_kinematics(model.tree, rest_joints, state.theta);
  MeshResult result;
  result.vertices = skin(model, rest, rest_joints, world);
  result.joints.resize(model.joint_count(), 3);
  for (int j = 0; j < model.joint_count(); ++j)
    result.joints.row(j) = world[static_cast<std::size_t>(j)].topRightCorner<3, 1>().transpose();
  result.vertices.rowwise() += state.translation.transpose();
  result.joints.rowwise() += state.translation.transpose();
  return result;
}

/// Checks every structural invariant; throws validation_error naming the
/// offending field. Used by the loader and the toy generator tests.
inline void validate_model(const BodyModelData& model) {
  const int v = model.vertex_count();
  const int joints = model.joint_count();
  if (v < 1) throw validation_error("template_vertices: empty");
  if (joints < 2) throw validation_error("parents: need at least 2 joints");
  if (static_cast<int>(model.tree.part_of_joint.size()) != joints)
    throw validation_error("part_of_joint: length " +
                           std::to_string(model.tree.part_of_joint.size()) + " != joint count " +
                           std::to_string(joints));
  int roots = 0;
  for (int j = 0; j < joints; ++j) {
    const int parent = model.tree.parents[static_cast<std::size_t>(j)];
    if (parent == KinematicTree::kNoParent) {
      ++roots;
      if (model.tree.part_of_joint[static_cast<std::size_t>(j)] != BodyPart::Root)
        throw validation_error("part_of_joint[" + std::to_string(j) + "]: root joint not labeled root");
    } else if (parent < 0 || parent >= j) {
      throw validation_error("parents[" + std::to_string(j) + "]: value " + std::to_string(parent) +
                             " violates topological order");
    } else if (model.tree.part_of_joint[static_cast<std::size_t>(j)] == BodyPart::Root) {
      throw validation_error("part_of_joint[" + std::to_string(j) + "]: non-root joint labeled root");
    }
  }
  if (roots != 1) throw validation_error("parents: expected exactly one root, found " + std::to_string(roots));
  detail::require_finite(model.template_vertices, "template_vertices");
  if (model.shape_dirs.rows() != 3 * v || model.shape_dirs.cols() != kShapeCoeffs)
    throw validation_error("shape_dirs: expected shape " + std::to_string(v) + "x3x10");
  if (model.expr_dirs.rows() != 3 * v || model.expr_dirs.cols() != kExprCoeffs)
    throw validation_error("expr_dirs: expected shape " + std::to_string(v) + "x3x10");
  detail::require_finite(model.shape_dirs, "shape_dirs");
  detail::require_finite(model.expr_dirs, "expr_dirs");
  if (model.joint_regressor.rows() != joints || model.joint_regressor.cols() != v)
    throw validation_error("joint_regressor: expected shape JxV");
  for (int j = 0; j < joints; ++j) {
    if (model.joint_regressor.row(j).minCoeff() < 0.0)
      throw validation_error("joint_regressor[" + std::to_string(j) + "]: negative entry");
    if (std::abs(model.joint_regressor.row(j).sum() - 1.0) > 1e-9)
      throw validation_error("joint_regressor[" + std::to_string(j) + "]: row sum " +
                             std::to_string(model.joint_regressor.row(j).sum()) + " != 1");
  }
  if (model.skin_weights.rows() != v || model.skin_weights.cols() != joints)
    throw validation_error("skin_weights: expected shape VxJ");
  for (int i = 0; i < v; ++i) {
    if (model.skin_weights.row(i).minCoeff() < 0.0)
      throw validation_error("skin_weights[" + std::to_string(i) + "]: negative entry");
    if (std::abs(model.skin_weights.row(i).sum() - 1.0) > 1e-9)
      throw validation_error("skin_weights[" + std::to_string(i) + "]: row sum " +
                             std::to_string(model.skin_weights.row(i).sum()) + " != 1");
  }
  for (const char* name : {"left_hand", "right_hand", "face", "all"}) {
    auto it = model.part_vertex_masks.find(name);
    if (it == model.part_vertex_masks.end())
      throw validation_error("part_vertex_masks: missing '" + std::string(name) + "'");
  }
  std::set<int> all_set;
  for (const auto& [name, mask] : model.part_vertex_masks) {
    for (int idx : mask)
      if (idx < 0 || idx >= v)
        throw validation_error("part_vertex_masks." + name + ": vertex index " +
                               std::to_string(idx) + " out of range");
    if (name == "all") all_set.insert(mask.begin(), mask.end());
  }
  const std::array<const char*, 3> disjoint = {"left_hand", "right_hand", "face"};
  for (std::size_t a = 0; a < disjoint.size(); ++a) {
    const auto& mask_a = model.part_vertex_masks.at(disjoint[a]);
    const std::set<int> set_a(mask_a.begin(), mask_a.end());
    for (int idx : mask_a)
      if (!all_set.count(idx))
        throw validation_error("part_vertex_masks." + std::string(disjoint[a]) +
                               ": not a subset of 'all'");
    for (std::size_t b = a + 1; b < disjoint.size(); ++b)
      for (int idx : model.part_vertex_masks.at(disjoint[b]))
        if (set_a.count(idx))
          throw validation_error("part_vertex_masks: '" + std::string(disjoint[a]) + "' and '" +
                                 std::string(disjoint[b]) + "' overlap at vertex " +
                                 std::to_string(idx));
  }
  if (model.left_wrist < 0 || model.left_wrist >= joints)
    throw validation_error("wrist_joints.left: out of range");
  if (model.right_wrist < 0 || model.right_wrist >= joints)
    throw validation_error("wrist_joints.right: out of range");
  if (model.pelvis_joint < 0 || model.pelvis_joint >= joints)
    throw validation_error("pelvis_joint: out of range");
}

enum class ToyLayout { Canonical, Minimal };

namespace detail {

inline void fill_sparse_stochastic_row(Eigen::Ref<Eigen::RowVectorXd> row,
                                       const std::vector<int>& candidates, SplitMix64& rng) {
  const std::size_t take =
      std::min<std::size_t>(candidates.size(), 1 + static_cast<std::size_t>(rng.below(4)));
  std::vector<int> pool = candidates;
  double total = 0.0;
  std::vector<std::pair<int, double>> picks;
  picks.reserve(take);
  for (std::size_t k = 0; k < take; ++k) {
    const std::size_t at = static_cast<std::size_t>(rng.below(pool.size()));
    const double w = 0.05 + rng.uniform();
    picks.emplace_back(pool[at], w);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(at));
    total += w;
  }
  for (const auto& [idx, w] : picks) row[idx] = w / total;
  // renormalize exactly so row sums survive the 1e-9 invariant
  row /= row.sum();
}

}  // namespace detail

/// Deterministic toy model generator so every test and fixture runs without
/// licensed assets. Canonical layout fixes J=55 with the standard partition;
/// minimal builds a root plus random body chain. Vertex blocks are assigned to
/// body/hands/face regions and both the regressor and the skin weights draw
/// only from the matching region, so part metrics behave like they would on a
/// real body.
inline BodyModelData gen_toy_model(std::uint64_t seed, int num_vertices, int num_joints,
                                   ToyLayout layout = ToyLayout::Canonical) {
  if (layout == ToyLayout::Canonical) num_joints = kCanonicalJoints;
  if (num_joints < 2) throw std::invalid_argument("gen_toy_model: need at least 2 joints");
  const int min_vertices = layout == ToyLayout::Canonical ? 16 : 8;
  if (num_vertices < min_vertices)
    throw std::invalid_argument("gen_toy_model: need at least " + std::to_string(min_vertices) +
                                " vertices for this layout");
  SplitMix64 rng(seed, "toy_model");

  BodyModelData model;
  if (layout == ToyLayout::Canonical) {
    model.tree = canonical_tree();
    model.left_wrist = kLeftWrist;
    model.right_wrist = kRightWrist;
    model.pelvis_joint = 0;
  } else {
    model.tree.parents.resize(static_cast<std::size_t>(num_joints));
    model.tree.part_of_joint.assign(static_cast<std::size_t>(num_joints), BodyPart::Body);
    model.tree.parents[0] = KinematicTree::kNoParent;
    model.tree.part_of_joint[0] = BodyPart::Root;
    for (int j = 1; j < num_joints; ++j)
      model.tree.parents[static_cast<std::size_t>(j)] =
          static_cast<int>(rng.below(static_cast<std::uint64_t>(j)));
    model.left_wrist = num_joints >= 3 ? num_joints - 2 : 1;
    model.right_wrist = num_joints - 1;
    model.pelvis_joint = 0;
  }
  const int joints = num_joints;
  const int v = num_vertices;

  // vertex blocks: body | left hand | right hand | face
  const int hand_block = std::max(4, v * 3 / 20);
  const int face_block = std::max(3, v / 10);
  const int body_block = v - 2 * hand_block - face_block;
  if (body_block < 4) throw std::invalid_argument("gen_toy_model: too few vertices for part blocks");
  const int left_begin = body_block;
  const int right_begin = body_block + hand_block;
  const int face_begin = body_block + 2 * hand_block;

  model.template_vertices.resize(v, 3);
  auto cluster = [&](int row, const Eigen::Vector3d& center, const Eigen::Vector3d& radius) {
    for (int c = 0; c < 3; ++c)
      model.template_vertices(row, c) = center[c] + rng.uniform(-radius[c], radius[c]);
  };
  for (int i = 0; i < body_block; ++i)
    cluster(i, {0.0, 0.1, 0.0}, {0.25, 0.65, 0.12});
  for (int i = left_begin; i < right_begin; ++i)
    cluster(i, {0.72, 0.05, 0.0}, {0.07, 0.07, 0.05});
  for (int i = right_begin; i < face_begin; ++i)
    cluster(i, {-0.72, 0.05, 0.0}, {0.07, 0.07, 0.05});
  for (int i = face_begin; i < v; ++i)
    cluster(i, {0.0, 0.78, 0.04}, {0.09, 0.09, 0.06});

  std::vector<int> body_vertices, left_vertices, right_vertices, face_vertices, all_vertices;
  for (int i = 0; i < body_block; ++i) body_vertices.push_back(i);
  for (int i = left_begin; i < right_begin; ++i) left_vertices.push_back(i);
  for (int i = right_begin; i < face_begin; ++i) right_vertices.push_back(i);
  for (int i = face_begin; i < v; ++i) face_vertices.push_back(i);
  for (int i = 0; i < v; ++i) all_vertices.push_back(i);
  model.part_vertex_masks = {{"all", all_vertices},
                             {"face", face_vertices},
                             {"left_hand", left_vertices},
                             {"right_hand", right_vertices}};

  auto vertex_region = [&](int j) -> const std::vector<int>& {
    switch (model.tree.part_of_joint[static_cast<std::size_t>(j)]) {
      case BodyPart::LeftHand: return left_vertices;
      case BodyPart::RightHand: return right_vertices;
      case BodyPart::Jaw:
      case BodyPart::Eye: return face_vertices;
      default: return body_vertices;
    }
  };
  model.joint_regressor = Eigen::MatrixXd::Zero(joints, v);
  for (int j = 0; j < joints; ++j)
    detail::fill_sparse_stochastic_row(model.joint_regressor.row(j), vertex_region(j), rng);

  std::vector<int> body_joints = model.tree.joints_of(BodyPart::Body);
  body_joints.insert(body_joints.begin(), model.pelvis_joint);
  std::vector<int> left_joints = model.tree.joints_of(BodyPart::LeftHand);
  std::vector<int> right_joints = model.tree.joints_of(BodyPart::RightHand);
  std::vector<int> face_joints = model.tree.joints_of(BodyPart::Jaw);
  for (int j : model.tree.joints_of(BodyPart::Eye)) face_joints.push_back(j);
  auto push_unique = [](std::vector<int>& list, int j) {
    for (int existing : list)
      if (existing == j) return;
    list.push_back(j);
  };
  push_unique(left_joints, model.left_wrist);
  push_unique(right_joints, model.right_wrist);
  if (face_joints.empty()) face_joints = body_joints;

  auto joint_region = [&](int vertex) -> const std::vector<int>& {
    if (vertex >= face_begin) return face_joints;
    if (vertex >= right_begin) return right_joints;
    if (vertex >= left_begin) return left_joints;
    return body_joints;
  };
  model.skin_weights = Eigen::MatrixXd::Zero(v, joints);
  for (int i = 0; i < v; ++i)
    detail::fill_sparse_stochastic_row(model.skin_weights.row(i), joint_region(i), rng);

  model.shape_dirs.resize(3 * v, kShapeCoeffs);
  for (int r = 0; r < 3 * v; ++r)
    for (int c = 0; c < kShapeCoeffs; ++c) model.shape_dirs(r, c) = 0.01 * rng.gauss();
  // expressions deform the face region only
  model.expr_dirs = Eigen::MatrixXd::Zero(3 * v, kExprCoeffs);
  for (int i = face_begin; i < v; ++i)
    for (int c = 0; c < 3; ++c)
      for (int e = 0; e < kExprCoeffs; ++e) model.expr_dirs(3 * i + c, e) = 0.003 * rng.gauss();

  return model;
}

}  // namespace ehps
