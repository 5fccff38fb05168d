#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ehps/body_model.hpp"
#include "ehps/errors.hpp"

namespace ehps {

enum class AlignKind { None, RootTranslation, Procrustes };

/// Alignment applied to predictions before error computation. RootTranslation
/// subtracts the offset between a prediction anchor and the matching ground
/// truth anchor; Procrustes fits a full similarity (rotation, translation and
/// scale).
struct AlignmentMode {
  AlignKind kind = AlignKind::None;

  static AlignmentMode none() { return {AlignKind::None}; }
  static AlignmentMode root_translation() { return {AlignKind::RootTranslation}; }
  static AlignmentMode procrustes() { return {AlignKind::Procrustes}; }
};

inline const char* to_string(AlignKind k) {
  switch (k) {
    case AlignKind::None: return "none";
    case AlignKind::RootTranslation: return "root_translation";
    case AlignKind::Procrustes: return "procrustes";
  }
  return "?";
}

inline AlignKind align_kind_from_string(const std::string& s) {
  if (s == "none") return AlignKind::None;
  if (s == "root_translation" || s == "root") return AlignKind::RootTranslation;
  if (s == "procrustes" || s == "pa") return AlignKind::Procrustes;
  throw validation_error("unknown alignment '" + s + "'");
}

enum class MetricKind { PVE, MPJPE };
enum class MetricPart { All, LeftHand, RightHand, Hands, Face };

inline const char* to_string(MetricKind k) { return k == MetricKind::PVE ? "PVE" : "MPJPE"; }
inline const char* to_string(MetricPart p) {
  switch (p) {
    case MetricPart::All: return "all";
    case MetricPart::LeftHand: return "left_hand";
    case MetricPart::RightHand: return "right_hand";
    case MetricPart::Hands: return "hands";
    case MetricPart::Face: return "face";
  }
  return "?";
}

inline MetricKind metric_kind_from_string(const std::string& s) {
  if (s == "PVE" || s == "pve") return MetricKind::PVE;
  if (s == "MPJPE" || s == "mpjpe") return MetricKind::MPJPE;
  throw validation_error("unknown metric kind '" + s + "'");
}

inline MetricPart metric_part_from_string(const std::string& s) {
  if (s == "all") return MetricPart::All;
  if (s == "left_hand") return MetricPart::LeftHand;
  if (s == "right_hand") return MetricPart::RightHand;
  if (s == "hands") return MetricPart::Hands;
  if (s == "face") return MetricPart::Face;
  throw validation_error("unknown metric part '" + s + "'");
}

struct MetricSpec {
  MetricKind kind = MetricKind::PVE;
  MetricPart part = MetricPart::All;
  AlignmentMode alignment;

  std::string name() const {
    std::string n = to_string(kind);
    if (part != MetricPart::All) n += std::string("-") + to_string(part);
    if (alignment.kind == AlignKind::Procrustes) n = "PA-" + n;
    if (alignment.kind == AlignKind::None) n += "(raw)";
    return n;
  }
};

/// Per-instance and aggregate errors for one metric, in millimeters.
struct MetricReport {
  MetricSpec spec;
  std::vector<double> per_instance_mm;
  double mean_mm = 0.0;
  std::size_t count = 0;
};

struct Similarity {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Points apply(const Points& p) const {
    Points out = (scale * (rotation * p.transpose())).transpose();
    out.rowwise() += translation.transpose();
    return out;
  }
};

/// Least-squares similarity fit source -> target: minimizes
/// sum ||target - (s R source + t)||^2 via SVD of the cross-covariance,
/// with the reflection-corrected closed form. s is fixed to 1 when
/// with_scale is off.
inline Similarity umeyama_align(const Points& source, const Points& target, bool with_scale) {
  const Eigen::Index n = source.rows();
  if (n < 3 || target.rows() != n)
    throw std::invalid_argument("umeyama_align: need matching point sets with at least 3 points");
  const Eigen::RowVector3d mu_src = source.colwise().mean();
  const Eigen::RowVector3d mu_tgt = target.colwise().mean();
  const Points cs = source.rowwise() - mu_src;
  const Points ct = target.rowwise() - mu_tgt;
  const double var_src = cs.squaredNorm() / static_cast<double>(n);
  const Eigen::Matrix3d cov = (ct.transpose() * cs) / static_cast<double>(n);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sigma = svd.singularValues();
  if (var_src <= 1e-18 || sigma[0] <= 1e-18 || sigma[1] <= 1e-12 * sigma[0])
    throw degenerate_geometry_error("umeyama_align: rank-deficient point configuration");
  Eigen::Vector3d d = Eigen::Vector3d::Ones();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d[2] = -1.0;
  Similarity result;
  result.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  result.scale = with_scale ? sigma.dot(d) / var_src : 1.0;
  if (result.scale <= 0.0)
    throw degenerate_geometry_error("umeyama_align: non-positive scale");
  result.translation = mu_tgt.transpose() - result.scale * result.rotation * mu_src.transpose();
  return result;
}

/// Mean L2 distance between matched point sets after alignment, in mm.
/// root_translation requires the (pred, gt) anchor positions.
inline double position_error(
    const Points& pred, const Points& gt, AlignmentMode alignment,
    const std::optional<std::pair<Eigen::Vector3d, Eigen::Vector3d>>& align_anchor = std::nullopt) {
  const Eigen::Index k = pred.rows();
  if (k == 0 || gt.rows() != k)
    throw std::invalid_argument("position_error: point counts differ");
  Points aligned = pred;
  switch (alignment.kind) {
    case AlignKind::None:
      break;
    case AlignKind::RootTranslation: {
      if (!align_anchor)
        throw std::invalid_argument("position_error: root_translation needs anchor positions");
      aligned.rowwise() -= (align_anchor->first - align_anchor->second).transpose();
      break;
    }
    case AlignKind::Procrustes:
      aligned = umeyama_align(pred, gt, /*with_scale=*/true).apply(pred);
      break;
  }
  return (aligned - gt).rowwise().norm().mean() * 1000.0;
}

/// Knobs for part-metric anchoring. The face anchor defaults to the parent of
/// the model's first jaw joint; models without one fall back to the pelvis.
struct MetricsOptions {
  std::optional<int> face_anchor_joint;
};

namespace detail {

inline Points select_rows(const Points& m, const std::vector<int>& idx) {
  Points out(static_cast<Eigen::Index>(idx.size()), 3);
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

inline int face_anchor(const BodyModelData& model, const MetricsOptions& opts) {
  if (opts.face_anchor_joint) {
    const int j = *opts.face_anchor_joint;
    if (j < 0 || j >= model.joint_count())
      throw std::invalid_argument("face anchor joint out of range");
    return j;
  }
  for (int j = 0; j < model.joint_count(); ++j)
    if (model.tree.part_of_joint[static_cast<std::size_t>(j)] == BodyPart::Jaw) {
      const int parent = model.tree.parents[static_cast<std::size_t>(j)];
      if (parent != KinematicTree::kNoParent) return parent;
    }
  return model.pelvis_joint;
}

// Point rows and the root-translation anchor joint for one one-sided part.
struct PartSelection {
  std::vector<int> rows;
  int anchor_joint = -1;
  bool on_joints = false;
};

inline PartSelection select_part(const BodyModelData& model, MetricKind kind, MetricPart part,
                                 const MetricsOptions& opts) {
  PartSelection sel;
  sel.on_joints = kind == MetricKind::MPJPE;
  auto joints_for = [&](BodyPart p) {
    std::vector<int> j = model.tree.joints_of(p);
    if (j.empty())
      throw std::invalid_argument(std::string("model has no joints labeled '") + to_string(p) + "'");
    return j;
  };
  switch (part) {
    case MetricPart::All:
      if (sel.on_joints) {
        sel.rows.resize(static_cast<std::size_t>(model.joint_count()));
        for (int j = 0; j < model.joint_count(); ++j) sel.rows[static_cast<std::size_t>(j)] = j;
      } else {
        sel.rows = model.mask("all");
      }
      sel.anchor_joint = model.pelvis_joint;
      break;
    case MetricPart::LeftHand:
      sel.rows = sel.on_joints ? joints_for(BodyPart::LeftHand) : model.mask("left_hand");
      sel.anchor_joint = model.left_wrist;
      break;
    case MetricPart::RightHand:
      sel.rows = sel.on_joints ? joints_for(BodyPart::RightHand) : model.mask("right_hand");
      sel.anchor_joint = model.right_wrist;
      break;
    case MetricPart::Face: {
      if (sel.on_joints) {
        sel.rows = model.tree.joints_of(BodyPart::Jaw);
        for (int j : model.tree.joints_of(BodyPart::Eye)) sel.rows.push_back(j);
        if (sel.rows.empty()) throw std::invalid_argument("model has no face joints");
      } else {
        sel.rows = model.mask("face");
      }
      sel.anchor_joint = face_anchor(model, opts);
      break;
    }
    case MetricPart::Hands:
      throw std::invalid_argument("select_part: hands is evaluated per side");
  }
  return sel;
}

inline double one_sided_error(const MeshResult& pred, const MeshResult& gt,
                              const PartSelection& sel, AlignmentMode alignment) {
  const Points& pred_points = sel.on_joints ? pred.joints : pred.vertices;
  const Points& gt_points = sel.on_joints ? gt.joints : gt.vertices;
  std::optional<std::pair<Eigen::Vector3d, Eigen::Vector3d>> anchor;
  if (alignment.kind == AlignKind::RootTranslation)
    anchor = std::make_pair(Eigen::Vector3d(pred.joints.row(sel.anchor_joint).transpose()),
                            Eigen::Vector3d(gt.joints.row(sel.anchor_joint).transpose()));
  return position_error(select_rows(pred_points, sel.rows), select_rows(gt_points, sel.rows),
                        alignment, anchor);
}

}  // namespace detail

/// One instance's error per metric spec, in mm. `hands` evaluates left and
/// right independently (each anchored at or Procrustes-fit on its own side)
/// and averages the two.
inline std::vector<double> instance_metrics(const MeshResult& pred, const MeshResult& gt,
                                            const BodyModelData& model,
                                            const std::vector<MetricSpec>& specs,
                                            const MetricsOptions& opts = {}) {
  if (pred.vertices.rows() != gt.vertices.rows() || pred.joints.rows() != gt.joints.rows())
    throw std::invalid_argument("instance_metrics: pred and gt topologies differ");
  if (pred.vertices.rows() != model.vertex_count() || pred.joints.rows() != model.joint_count())
    throw std::invalid_argument("instance_metrics: meshes do not match the model");
  std::vector<double> out;
  out.reserve(specs.size());
  for (const MetricSpec& spec : specs) {
    if (spec.part == MetricPart::Hands) {
      const auto left = detail::select_part(model, spec.kind, MetricPart::LeftHand, opts);
      const auto right = detail::select_part(model, spec.kind, MetricPart::RightHand, opts);
      out.push_back(0.5 * (detail::one_sided_error(pred, gt, left, spec.alignment) +
                           detail::one_sided_error(pred, gt, right, spec.alignment)));
    } else {
      const auto sel = detail::select_part(model, spec.kind, spec.part, opts);
      out.push_back(detail::one_sided_error(pred, gt, sel, spec.alignment));
    }
  }
  return out;
}

/// NMVE/NMJE-style normalization: error divided by the detection F1 score.
inline double detection_normalized(double error_mm, double f1) {
  if (!(f1 > 0.0) || f1 > 1.0)
    throw std::invalid_argument("detection_normalized: f1 must be in (0, 1]");
  return error_mm / f1;
}

/// Dataset-level mean in fixed index order; deterministic regardless of how
/// the per-instance values were produced.
inline MetricReport aggregate(const std::vector<double>& per_instance_mm,
                              const MetricSpec& spec = {}) {
  if (per_instance_mm.empty()) throw std::invalid_argument("aggregate: empty input");
  MetricReport report;
  report.spec = spec;
  report.per_instance_mm = per_instance_mm;
  double sum = 0.0;
  for (double v : per_instance_mm) sum += v;
  report.mean_mm = sum / static_cast<double>(per_instance_mm.size());
  report.count = per_instance_mm.size();
  return report;
}

}  // namespace ehps
