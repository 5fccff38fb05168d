#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ehps/body_model.hpp"
#include "ehps/errors.hpp"
#include "ehps/rng.hpp"

namespace ehps {

/// Three fully-connected layers mapping gendered shape coefficients to
/// neutral ones: 10 -> H -> H -> 10, rectified-linear hidden activations,
/// identity output.
struct AdapterMLP {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;

  int hidden_width() const { return static_cast<int>(w1.rows()); }

  static AdapterMLP zeros(int hidden = 64) {
    AdapterMLP a;
    a.w1 = Eigen::MatrixXd::Zero(hidden, kShapeCoeffs);
    a.w2 = Eigen::MatrixXd::Zero(hidden, hidden);
    a.w3 = Eigen::MatrixXd::Zero(kShapeCoeffs, hidden);
    a.b1 = Eigen::VectorXd::Zero(hidden);
    a.b2 = Eigen::VectorXd::Zero(hidden);
    a.b3 = Eigen::VectorXd::Zero(kShapeCoeffs);
    return a;
  }

  static AdapterMLP random_init(int hidden, std::uint64_t seed) {
    AdapterMLP a = zeros(hidden);
    SplitMix64 rng(seed, "adapter_init");
    auto fill = [&rng](Eigen::MatrixXd& w) {
      const double scale = std::sqrt(2.0 / static_cast<double>(w.cols()));
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = scale * rng.gauss();
    };
    fill(a.w1);
    fill(a.w2);
    fill(a.w3);
    return a;
  }

  /// Exact linear chain: relu(x) - relu(-x) = x, so any 10x10 map fits in
  /// hidden width >= 20. Handy as an identity or planted-map adapter.
  static AdapterMLP linear(const Eigen::MatrixXd& map, int hidden = 64) {
    if (map.rows() != kShapeCoeffs || map.cols() != kShapeCoeffs)
      throw std::invalid_argument("AdapterMLP::linear: map must be 10x10");
    if (hidden < 2 * kShapeCoeffs)
      throw std::invalid_argument("AdapterMLP::linear: hidden width must be at least 20");
    AdapterMLP a = zeros(hidden);
    a.w1.topRows(kShapeCoeffs) = Eigen::MatrixXd::Identity(kShapeCoeffs, kShapeCoeffs);
    a.w1.middleRows(kShapeCoeffs, kShapeCoeffs) =
        -Eigen::MatrixXd::Identity(kShapeCoeffs, kShapeCoeffs);
    a.w2.topLeftCorner(2 * kShapeCoeffs, 2 * kShapeCoeffs) =
        Eigen::MatrixXd::Identity(2 * kShapeCoeffs, 2 * kShapeCoeffs);
    a.w3.leftCols(kShapeCoeffs) = map;
    a.w3.middleCols(kShapeCoeffs, kShapeCoeffs) = -map;
    return a;
  }
};

inline Eigen::VectorXd adapter_forward(const AdapterMLP& adapter, const Eigen::VectorXd& beta) {
  if (beta.size() != kShapeCoeffs)
    throw std::invalid_argument("adapter_forward: beta must have 10 coefficients");
  if (!beta.allFinite()) throw std::invalid_argument("adapter_forward: non-finite beta");
  const Eigen::VectorXd h1 = (adapter.w1 * beta + adapter.b1).cwiseMax(0.0);
  const Eigen::VectorXd h2 = (adapter.w2 * h1 + adapter.b2).cwiseMax(0.0);
  return adapter.w3 * h2 + adapter.b3;
}

struct AdapterTrainConfig {
  std::size_t steps = 80;
  double step_size = 0.05;
  std::size_t batch_size = 12;
  std::uint64_t pose_sampler_seed = 1;
  std::uint64_t beta_sampler_seed = 2;
  double fd_epsilon = 1e-4;  // beta units
  int hidden_width = 64;

  void validate() const {
    if (steps == 0 || batch_size == 0 || !(step_size > 0.0) || !(fd_epsilon > 0.0) ||
        hidden_width < 1)
      throw std::invalid_argument("AdapterTrainConfig: all values must be positive");
  }
};

/// Diverse plausible training poses: clamped Gaussian axis-angles, sigma 0.3
/// rad on body joints and 0.1 rad on hand joints, limited to +-pi/2 per axis.
inline std::vector<Eigen::Matrix<double, Eigen::Dynamic, 3>> sample_adapter_poses(
    const KinematicTree& tree, std::size_t count, std::uint64_t seed) {
  SplitMix64 rng(seed, "adapter_poses");
  const double half_pi = 1.5707963267948966;
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, 3>> poses;
  poses.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    Eigen::Matrix<double, Eigen::Dynamic, 3> theta(tree.joint_count(), 3);
    for (int j = 0; j < tree.joint_count(); ++j) {
      const BodyPart part = tree.part_of_joint[static_cast<std::size_t>(j)];
      const bool hand = part == BodyPart::LeftHand || part == BodyPart::RightHand;
      const double sigma = hand ? 0.1 : 0.3;
      for (int c = 0; c < 3; ++c) theta(j, c) = rng.clamped_gauss(sigma, half_pi);
    }
    poses.push_back(std::move(theta));
  }
  return poses;
}

inline std::vector<Eigen::VectorXd> sample_adapter_betas(std::size_t count, std::uint64_t seed) {
  SplitMix64 rng(seed, "adapter_betas");
  std::vector<Eigen::VectorXd> betas;
  betas.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    Eigen::VectorXd beta(kShapeCoeffs);
    for (int i = 0; i < kShapeCoeffs; ++i) beta[i] = rng.gauss();
    betas.push_back(std::move(beta));
  }
  return betas;
}

namespace detail {

inline void check_adapter_topology(const BodyModelData& model_g, const BodyModelData& model_n) {
  if (model_g.vertex_count() != model_n.vertex_count() ||
      model_g.joint_count() != model_n.joint_count())
    throw std::invalid_argument(
        "adapter: gendered and neutral models have different topologies (" +
        std::to_string(model_g.vertex_count()) + "v/" + std::to_string(model_g.joint_count()) +
        "j vs " + std::to_string(model_n.vertex_count()) + "v/" +
        std::to_string(model_n.joint_count()) + "j); cross-topology adaptation is unsupported");
}

inline Points pose_with_beta(const BodyModelData& model,
                             const Eigen::Matrix<double, Eigen::Dynamic, 3>& theta,
                             const Eigen::VectorXd& beta) {
  FullPoseState state;
  state.theta = theta;
  state.beta = beta;
  return forward(model, state).vertices;
}

inline double mean_vertex_distance(const Points& a, const Points& b) {
  return (a - b).rowwise().norm().mean();
}

}  // namespace detail

/// Batch loss in meters: mean over samples and vertices of the distance
/// between the gendered mesh posed with beta and the neutral mesh posed with
/// the adapted beta (psi = 0, translation = 0).
inline double adapter_loss(const BodyModelData& model_g, const BodyModelData& model_n,
                           const AdapterMLP& adapter,
                           const std::vector<Eigen::Matrix<double, Eigen::Dynamic, 3>>& poses,
                           const std::vector<Eigen::VectorXd>& betas) {
  detail::check_adapter_topology(model_g, model_n);
  if (poses.size() != betas.size() || poses.empty())
    throw std::invalid_argument("adapter_loss: need matching non-empty pose and beta batches");
  double total = 0.0;
  for (std::size_t s = 0; s < poses.size(); ++s) {
    const Points gendered = detail::pose_with_beta(model_g, poses[s], betas[s]);
    const Points neutral =
        detail::pose_with_beta(model_n, poses[s], adapter_forward(adapter, betas[s]));
    total += detail::mean_vertex_distance(gendered, neutral);
  }
  return total / static_cast<double>(poses.size());
}

/// Held-out evaluation in millimeters (the same vertex-to-vertex quantity as
/// the loss).
inline double eval_adapter(const BodyModelData& model_g, const BodyModelData& model_n,
                           const AdapterMLP& adapter,
                           const std::vector<Eigen::Matrix<double, Eigen::Dynamic, 3>>& poses,
                           const std::vector<Eigen::VectorXd>& betas) {
  return adapter_loss(model_g, model_n, adapter, poses, betas) * 1000.0;
}

struct AdapterGradients {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
};

/// Loss and parameter gradients on a batch. The body model is not
/// differentiated analytically: the loss gradient w.r.t. the 10 adapted
/// coefficients comes from central finite differences through the neutral
/// model (20 forward passes per sample), and backpropagation through the
/// network itself is exact. Accumulation is in sample index order.
inline std::pair<double, AdapterGradients> adapter_loss_and_gradients(
    const BodyModelData& model_g, const BodyModelData& model_n, const AdapterMLP& adapter,
    const std::vector<Eigen::Matrix<double, Eigen::Dynamic, 3>>& poses,
    const std::vector<Eigen::VectorXd>& betas, double fd_epsilon) {
  detail::check_adapter_topology(model_g, model_n);
  if (poses.size() != betas.size() || poses.empty())
    throw std::invalid_argument("adapter gradients: need matching non-empty batches");
  const int hidden = adapter.hidden_width();
  AdapterGradients grad{Eigen::MatrixXd::Zero(hidden, kShapeCoeffs),
                        Eigen::MatrixXd::Zero(hidden, hidden),
                        Eigen::MatrixXd::Zero(kShapeCoeffs, hidden),
                        Eigen::VectorXd::Zero(hidden), Eigen::VectorXd::Zero(hidden),
                        Eigen::VectorXd::Zero(kShapeCoeffs)};
  double total_loss = 0.0;
  const double batch = static_cast<double>(poses.size());
  for (std::size_t s = 0; s < poses.size(); ++s) {
    const Eigen::VectorXd& x = betas[s];
    const Eigen::VectorXd z1 = adapter.w1 * x + adapter.b1;
    const Eigen::VectorXd h1 = z1.cwiseMax(0.0);
    const Eigen::VectorXd z2 = adapter.w2 * h1 + adapter.b2;
    const Eigen::VectorXd h2 = z2.cwiseMax(0.0);
    const Eigen::VectorXd adapted = adapter.w3 * h2 + adapter.b3;

    const Points gendered = detail::pose_with_beta(model_g, poses[s], x);
    total_loss += detail::mean_vertex_distance(
        gendered, detail::pose_with_beta(model_n, poses[s], adapted));

    Eigen::VectorXd dl_dadapted(kShapeCoeffs);
    for (int k = 0; k < kShapeCoeffs; ++k) {
      Eigen::VectorXd plus = adapted, minus = adapted;
      plus[k] += fd_epsilon;
      minus[k] -= fd_epsilon;
      const double lp = detail::mean_vertex_distance(
          gendered, detail::pose_with_beta(model_n, poses[s], plus));
      const double lm = detail::mean_vertex_distance(
          gendered, detail::pose_with_beta(model_n, poses[s], minus));
      dl_dadapted[k] = (lp - lm) / (2.0 * fd_epsilon);
    }

    const Eigen::VectorXd gy = dl_dadapted / batch;
    grad.w3 += gy * h2.transpose();
    grad.b3 += gy;
    const Eigen::VectorXd gz2 =
        (adapter.w3.transpose() * gy).cwiseProduct((z2.array() > 0.0).cast<double>().matrix());
    grad.w2 += gz2 * h1.transpose();
    grad.b2 += gz2;
    const Eigen::VectorXd gz1 =
        (adapter.w2.transpose() * gz2).cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
    grad.w1 += gz1 * x.transpose();
    grad.b1 += gz1;
  }
  return {total_loss / batch, grad};
}

struct AdapterTrainResult {
  AdapterMLP adapter;
  std::vector<double> loss_trace;  // accepted loss per step, non-increasing
  double final_eval_mm = 0.0;
};

/// Plain gradient descent over a fixed training batch. A step that fails to
/// improve the loss is rejected and the step size halved; the recorded trace
/// is therefore non-increasing. Deterministic for fixed seeds and config.
inline AdapterTrainResult train_adapter(const BodyModelData& model_g,
                                        const BodyModelData& model_n,
                                        const AdapterTrainConfig& config) {
  config.validate();
  detail::check_adapter_topology(model_g, model_n);
  const auto poses =
      sample_adapter_poses(model_n.tree, config.batch_size, config.pose_sampler_seed);
  const auto betas = sample_adapter_betas(config.batch_size, config.beta_sampler_seed);
  return train_adapter(model_g, model_n, config, poses, betas);
}

/// Same, on a caller-supplied batch (e.g. the pose-free theta = 0 regime).
inline AdapterTrainResult train_adapter(
    const BodyModelData& model_g, const BodyModelData& model_n, const AdapterTrainConfig& config,
    const std::vector<Eigen::Matrix<double, Eigen::Dynamic, 3>>& poses,
    const std::vector<Eigen::VectorXd>& betas) {
  config.validate();
  AdapterTrainResult result;
  result.adapter = AdapterMLP::random_init(config.hidden_width, config.beta_sampler_seed);
  double step_size = config.step_size;
  auto [loss, grad] = adapter_loss_and_gradients(model_g, model_n, result.adapter, poses, betas,
                                                 config.fd_epsilon);
  if (!std::isfinite(loss)) throw training_failure_error("train_adapter: non-finite loss", 0);
  for (std::size_t step = 0; step < config.steps; ++step) {
    bool accepted = false;
    while (step_size > 1e-14) {
      AdapterMLP candidate = result.adapter;
      candidate.w1 -= step_size * grad.w1;
      candidate.w2 -= step_size * grad.w2;
      candidate.w3 -= step_size * grad.w3;
      candidate.b1 -= step_size * grad.b1;
      candidate.b2 -= step_size * grad.b2;
      candidate.b3 -= step_size * grad.b3;
      auto [new_loss, new_grad] = adapter_loss_and_gradients(model_g, model_n, candidate, poses,
                                                             betas, config.fd_epsilon);
      if (std::isnan(new_loss))
        throw training_failure_error("train_adapter: loss diverged to NaN", step);
      if (new_loss <= loss) {
        result.adapter = std::move(candidate);
        loss = new_loss;
        grad = std::move(new_grad);
        accepted = true;
        break;
      }
      step_size *= 0.5;  // plateau: halve and retry
    }
    result.loss_trace.push_back(loss);
    if (!accepted) break;  // step size exhausted, converged
  }
  result.final_eval_mm = loss * 1000.0;
  return result;
}

struct LinearBaseline {
  Eigen::MatrixXd map;   // 10 x 10
  Eigen::VectorXd bias;  // 10
};

/// Exact least squares for the pose-free regime: with theta = 0 both meshes
/// are linear in their shape coefficients, so the best linear adapter solves
/// min over (M, b) of sum_s ||(T_g + S_g b_s) - (T_n + S_n (M b_s + b))||^2.
inline LinearBaseline fit_linear_baseline(const BodyModelData& model_g,
                                          const BodyModelData& model_n,
                                          const std::vector<Eigen::VectorXd>& betas) {
  detail::check_adapter_topology(model_g, model_n);
  if (betas.empty()) throw std::invalid_argument("fit_linear_baseline: empty beta batch");
  const Eigen::Index rows_per_sample = model_n.shape_dirs.rows();
  const Eigen::Index unknowns = kShapeCoeffs * kShapeCoeffs + kShapeCoeffs;
  Eigen::MatrixXd design(rows_per_sample * static_cast<Eigen::Index>(betas.size()), unknowns);
  Eigen::VectorXd target(design.rows());
  Eigen::VectorXd template_gap(rows_per_sample);
  for (Eigen::Index i = 0; i < model_g.template_vertices.rows(); ++i)
    for (int c = 0; c < 3; ++c)
      template_gap[3 * i + c] = model_g.template_vertices(i, c) - model_n.template_vertices(i, c);
  for (std::size_t s = 0; s < betas.size(); ++s) {
    const Eigen::Index row0 = rows_per_sample * static_cast<Eigen::Index>(s);
    for (int j = 0; j < kShapeCoeffs; ++j)
      design.block(row0, j * kShapeCoeffs, rows_per_sample, kShapeCoeffs).noalias() =
          betas[s][j] * model_n.shape_dirs;
    design.block(row0, kShapeCoeffs * kShapeCoeffs, rows_per_sample, kShapeCoeffs) =
        model_n.shape_dirs;
    target.segment(row0, rows_per_sample) = template_gap + model_g.shape_dirs * betas[s];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < unknowns)
    throw std::invalid_argument("fit_linear_baseline: underdetermined system, rank " +
                                std::to_string(qr.rank()) + " of " + std::to_string(unknowns) +
                                " (need more shape samples)");
  const Eigen::VectorXd x = qr.solve(target);
  LinearBaseline out;
  out.map.resize(kShapeCoeffs, kShapeCoeffs);
  for (int j = 0; j < kShapeCoeffs; ++j) out.map.col(j) = x.segment(j * kShapeCoeffs, kShapeCoeffs);
  out.bias = x.segment(kShapeCoeffs * kShapeCoeffs, kShapeCoeffs);
  return out;
}

inline nlohmann::ordered_json adapter_to_json(const AdapterMLP& adapter,
                                              const AdapterTrainConfig& config,
                                              double final_eval_mm) {
  auto matrix_rows = [](const Eigen::MatrixXd& m) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  auto vector_values = [](const Eigen::VectorXd& v) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v[i]);
    return row;
  };
  nlohmann::ordered_json j;
  j["layer_sizes"] = {kShapeCoeffs, adapter.hidden_width(), adapter.hidden_width(), kShapeCoeffs};
  j["weights"] = {matrix_rows(adapter.w1), matrix_rows(adapter.w2), matrix_rows(adapter.w3)};
  j["biases"] = {vector_values(adapter.b1), vector_values(adapter.b2), vector_values(adapter.b3)};
  j["config"] = {{"steps", config.steps},
                 {"step_size", config.step_size},
                 {"batch_size", config.batch_size},
                 {"pose_sampler_seed", config.pose_sampler_seed},
                 {"beta_sampler_seed", config.beta_sampler_seed},
                 {"fd_epsilon", config.fd_epsilon},
                 {"hidden_width", config.hidden_width}};
  j["final_eval_mm"] = final_eval_mm;
  return j;
}

inline AdapterMLP adapter_from_json(const nlohmann::ordered_json& j) {
  try {
    const auto sizes = j.at("layer_sizes").get<std::vector<int>>();
    if (sizes.size() != 4 || sizes[0] != kShapeCoeffs || sizes[3] != kShapeCoeffs ||
        sizes[1] != sizes[2] || sizes[1] < 1)
      throw validation_error("adapter: layer_sizes must be [10, H, H, 10]");
    AdapterMLP a = AdapterMLP::zeros(sizes[1]);
    auto read_matrix = [](const nlohmann::ordered_json& rows, Eigen::MatrixXd& m,
                          const char* name) {
      if (static_cast<Eigen::Index>(rows.size()) != m.rows())
        throw validation_error(std::string("adapter.") + name + ": wrong row count");
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != m.cols())
          throw validation_error(std::string("adapter.") + name + ": wrong column count");
        for (Eigen::Index c = 0; c < m.cols(); ++c)
          m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
      }
    };
    read_matrix(j.at("weights").at(0), a.w1, "weights[0]");
    read_matrix(j.at("weights").at(1), a.w2, "weights[1]");
    read_matrix(j.at("weights").at(2), a.w3, "weights[2]");
    auto read_vector = [](const nlohmann::ordered_json& row, Eigen::VectorXd& v,
                          const char* name) {
      const auto values = row.get<std::vector<double>>();
      if (static_cast<Eigen::Index>(values.size()) != v.size())
        throw validation_error(std::string("adapter.") + name + ": wrong length");
      v = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                            static_cast<Eigen::Index>(values.size()));
    };
    read_vector(j.at("biases").at(0), a.b1, "biases[0]");
    read_vector(j.at("biases").at(1), a.b2, "biases[1]");
    read_vector(j.at("biases").at(2), a.b3, "biases[2]");
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw validation_error("adapter: " + std::string(e.what()));
  }
}

inline void save_adapter(const AdapterMLP& adapter, const AdapterTrainConfig& config,
                         double final_eval_mm, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_adapter: cannot open '" + path + "'");
  out << adapter_to_json(adapter, config, final_eval_mm).dump(2) << '\n';
}

inline AdapterMLP load_adapter(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("load_adapter: cannot open '" + path + "'");
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw validation_error("load_adapter: " + std::string(e.what()));
  }
  return adapter_from_json(j);
}

}  // namespace ehps
