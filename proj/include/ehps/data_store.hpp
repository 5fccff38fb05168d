#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ehps/adapter.hpp"
#include "ehps/body_model.hpp"
#include "ehps/errors.hpp"
#include "ehps/rng.hpp"

namespace ehps {

enum class Gender { Neutral, Female, Male };
enum class ModelFormat { Smplx, Smpl };
enum class Split { Train, Val, Test };

inline const char* to_string(Gender g) {
  switch (g) {
    case Gender::Neutral: return "neutral";
    case Gender::Female: return "female";
    case Gender::Male: return "male";
  }
  return "?";
}
inline const char* to_string(ModelFormat f) { return f == ModelFormat::Smplx ? "smplx" : "smpl"; }
inline const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

inline Gender gender_from_string(const std::string& s) {
  if (s == "neutral") return Gender::Neutral;
  if (s == "female") return Gender::Female;
  if (s == "male") return Gender::Male;
  throw validation_error("unknown gender '" + s + "'");
}
inline ModelFormat model_format_from_string(const std::string& s) {
  if (s == "smplx") return ModelFormat::Smplx;
  if (s == "smpl") return ModelFormat::Smpl;
  throw validation_error("unknown model_format '" + s + "'");
}
inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw validation_error("unknown split '" + s + "'");
}

/// One standardized annotation or prediction. smpl-format records keep their
/// theta layout but are flagged: their hand and face parameters carry no
/// supervision and the gender conversion pipeline refuses them.
struct InstanceRecord {
  std::string id;
  std::optional<std::string> image_ref;
  std::optional<std::array<double, 4>> bbox;  // x, y, w, h pixels
  FullPoseState state;
  Gender gender = Gender::Neutral;
  ModelFormat model_format = ModelFormat::Smplx;
  Split split = Split::Train;
  std::map<std::string, std::string> meta;
};

inline nlohmann::ordered_json record_to_json(const InstanceRecord& record) {
  nlohmann::ordered_json j;
  j["id"] = record.id;
  if (record.image_ref) j["image_ref"] = *record.image_ref;
  if (record.bbox) j["bbox"] = *record.bbox;
  nlohmann::ordered_json theta = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < record.state.theta.rows(); ++r)
    theta.push_back({record.state.theta(r, 0), record.state.theta(r, 1), record.state.theta(r, 2)});
  nlohmann::ordered_json state;
  state["theta"] = std::move(theta);
  state["beta"] = std::vector<double>(record.state.beta.data(),
                                      record.state.beta.data() + record.state.beta.size());
  state["psi"] = std::vector<double>(record.state.psi.data(),
                                     record.state.psi.data() + record.state.psi.size());
  state["translation"] = {record.state.translation.x(), record.state.translation.y(),
                          record.state.translation.z()};
  j["state"] = std::move(state);
  j["gender"] = to_string(record.gender);
  j["model_format"] = to_string(record.model_format);
  j["split"] = to_string(record.split);
  j["meta"] = record.meta;  // std::map: sorted keys
  return j;
}

inline InstanceRecord record_from_json(const nlohmann::ordered_json& j, int expected_joints,
                                       const std::string& where) {
  InstanceRecord record;
  try {
    record.id = j.at("id").get<std::string>();
    if (record.id.empty()) throw validation_error(where + ": empty id");
    if (j.contains("image_ref")) record.image_ref = j.at("image_ref").get<std::string>();
    if (j.contains("bbox")) {
      const auto b = j.at("bbox").get<std::vector<double>>();
      if (b.size() != 4) throw validation_error(where + ": bbox must have 4 numbers");
      record.bbox = {b[0], b[1], b[2], b[3]};
    }
    const auto& state = j.at("state");
    const auto& theta = state.at("theta");
    if (!theta.is_array() || static_cast<int>(theta.size()) != expected_joints)
      throw validation_error(where + ": theta must have " + std::to_string(expected_joints) +
                             " joints, got " + std::to_string(theta.size()));
    record.state.theta.resize(expected_joints, 3);
    for (int r = 0; r < expected_joints; ++r) {
      const auto& row = theta[static_cast<std::size_t>(r)];
      if (!row.is_array() || row.size() != 3)
        throw validation_error(where + ": theta[" + std::to_string(r) + "] must have 3 values");
      for (int c = 0; c < 3; ++c)
        record.state.theta(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    const auto beta = state.at("beta").get<std::vector<double>>();
    const auto psi = state.at("psi").get<std::vector<double>>();
    if (static_cast<int>(beta.size()) != kShapeCoeffs)
      throw validation_error(where + ": beta must have 10 coefficients");
    if (static_cast<int>(psi.size()) != kExprCoeffs)
      throw validation_error(where + ": psi must have 10 coefficients");
    record.state.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), kShapeCoeffs);
    record.state.psi = Eigen::Map<const Eigen::VectorXd>(psi.data(), kExprCoeffs);
    const auto t = state.at("translation").get<std::vector<double>>();
    if (t.size() != 3) throw validation_error(where + ": translation must have 3 values");
    record.state.translation = Eigen::Vector3d(t[0], t[1], t[2]);
    if (!record.state.theta.allFinite() || !record.state.beta.allFinite() ||
        !record.state.psi.allFinite() || !record.state.translation.allFinite())
      throw validation_error(where + ": non-finite state value");
    record.gender = gender_from_string(j.at("gender").get<std::string>());
    record.model_format = model_format_from_string(j.at("model_format").get<std::string>());
    record.split = split_from_string(j.at("split").get<std::string>());
    if (j.contains("meta"))
      record.meta = j.at("meta").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(where + ": " + e.what());
  }
  return record;
}

/// JSON-lines loader. Validates every record and never yields a partially
/// valid list; errors name the offending line.
inline std::vector<InstanceRecord> load_records(const std::string& path, int expected_joints) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("load_records: cannot open '" + path + "'");
  std::vector<InstanceRecord> records;
  std::set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw validation_error(where + ": " + e.what());
    }
    InstanceRecord record = record_from_json(j, expected_joints, where);
    if (!ids.insert(record.id).second)
      throw validation_error(where + ": duplicate id '" + record.id + "'");
    records.push_back(std::move(record));
  }
  return records;
}

inline void save_records(const std::vector<InstanceRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_records: cannot open '" + path + "'");
  for (const auto& record : records) out << record_to_json(record).dump() << '\n';
  if (!out) throw std::runtime_error("save_records: write failed for '" + path + "'");
}

/// Replaces gendered shape coefficients by the matching adapter's output and
/// retags the record neutral; pose, expression and translation are untouched.
/// Idempotent on neutral records. Gendered smpl-format records are refused:
/// the adapters are trained within one topology only.
inline std::vector<InstanceRecord> convert_gendered(std::vector<InstanceRecord> records,
                                                    const AdapterMLP& adapter_f,
                                                    const AdapterMLP& adapter_m) {
  for (auto& record : records) {
    if (record.gender == Gender::Neutral) continue;
    if (record.model_format == ModelFormat::Smpl)
      throw std::invalid_argument("convert_gendered: record '" + record.id +
                                  "' is smpl-format; cross-topology conversion is unsupported");
    const AdapterMLP& adapter = record.gender == Gender::Female ? adapter_f : adapter_m;
    record.meta["beta_converted_from"] = to_string(record.gender);
    record.state.beta = adapter_forward(adapter, record.state.beta);
    record.gender = Gender::Neutral;
  }
  return records;
}

enum class HandComplexity { Low, Mixed, High };

inline const char* to_string(HandComplexity c) {
  switch (c) {
    case HandComplexity::Low: return "low";
    case HandComplexity::Mixed: return "mixed";
    case HandComplexity::High: return "high";
  }
  return "?";
}
inline HandComplexity hand_complexity_from_string(const std::string& s) {
  if (s == "low") return HandComplexity::Low;
  if (s == "mixed") return HandComplexity::Mixed;
  if (s == "high") return HandComplexity::High;
  throw validation_error("unknown hand complexity '" + s + "'");
}

/// Deterministic synthetic record pool in the canonical 55-joint layout. The
/// complexity knob scales hand axis-angle variance (mixed draws half its
/// instances from each regime), so median distance-to-relaxed orders
/// low < mixed < high.
inline std::vector<InstanceRecord> gen_synthetic_records(std::uint64_t seed, std::size_t n,
                                                         const std::string& dataset_id,
                                                         HandComplexity complexity) {
  SplitMix64 rng(seed, "synthetic_records:" + dataset_id);
  const double pi = 3.14159265358979323846;
  const KinematicTree tree = canonical_tree();
  std::vector<InstanceRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    InstanceRecord record;
    record.id = dataset_id + "_" + std::to_string(i);
    record.state = FullPoseState::zero(kCanonicalJoints);
    double hand_sigma = 0.0;
    switch (complexity) {
      case HandComplexity::Low: hand_sigma = 0.06; break;
      case HandComplexity::Mixed: hand_sigma = (i % 2 == 0) ? 0.06 : 0.45; break;
      case HandComplexity::High: hand_sigma = 0.45; break;
    }
    for (int j = 0; j < kCanonicalJoints; ++j) {
      const BodyPart part = tree.part_of_joint[static_cast<std::size_t>(j)];
      double sigma = 0.15;
      if (part == BodyPart::Root) sigma = 0.3;
      if (part == BodyPart::Jaw || part == BodyPart::Eye) sigma = 0.05;
      if (part == BodyPart::LeftHand || part == BodyPart::RightHand) sigma = hand_sigma;
      for (int c = 0; c < 3; ++c)
        record.state.theta(j, c) = rng.clamped_gauss(sigma, pi / 2.0);
    }
    for (int b = 0; b < kShapeCoeffs; ++b) record.state.beta[b] = rng.clamped_gauss(0.3, 2.0);
    for (int e = 0; e < kExprCoeffs; ++e) record.state.psi[e] = rng.clamped_gauss(0.2, 2.0);
    for (int c = 0; c < 3; ++c) record.state.translation[c] = rng.uniform(-1.0, 1.0);
    record.split = i % 10 < 8 ? Split::Train : (i % 10 == 8 ? Split::Val : Split::Test);
    record.meta["hand_complexity"] = to_string(complexity);
    records.push_back(std::move(record));
  }
  return records;
}

inline std::uint64_t checksum_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("checksum_file: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return fnv1a64(buffer.str());
}

/// Dataset handle: record file reference plus split counts and an FNV-1a
/// checksum of the record file bytes.
struct DatasetManifest {
  std::string dataset_id;
  std::map<std::string, std::size_t> split_counts;
  std::string records_path;  // relative to the manifest file
  std::uint64_t checksum = 0;
  std::string license_note;
};

inline void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  nlohmann::ordered_json j;
  j["dataset_id"] = manifest.dataset_id;
  j["splits"] = manifest.split_counts;
  j["records"] = manifest.records_path;
  j["checksum"] = manifest.checksum;
  j["license_note"] = manifest.license_note;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_manifest: cannot open '" + path + "'");
  out << j.dump(2) << '\n';
}

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("load_manifest: cannot open '" + path + "'");
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw validation_error("load_manifest: " + std::string(e.what()));
  }
  DatasetManifest manifest;
  try {
    manifest.dataset_id = j.at("dataset_id").get<std::string>();
    manifest.split_counts = j.at("splits").get<std::map<std::string, std::size_t>>();
    manifest.records_path = j.at("records").get<std::string>();
    manifest.checksum = j.at("checksum").get<std::uint64_t>();
    manifest.license_note = j.value("license_note", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw validation_error("load_manifest: " + std::string(e.what()));
  }
  return manifest;
}

/// Writes records next to a manifest describing them.
inline DatasetManifest write_dataset(const std::vector<InstanceRecord>& records,
                                     const std::string& dataset_id,
                                     const std::string& records_path,
                                     const std::string& manifest_path,
                                     const std::string& license_note = "synthetic toy data") {
  save_records(records, records_path);
  DatasetManifest manifest;
  manifest.dataset_id = dataset_id;
  for (const auto& record : records) ++manifest.split_counts[to_string(record.split)];
  manifest.records_path =
      std::filesystem::relative(records_path, std::filesystem::path(manifest_path).parent_path())
          .generic_string();
  manifest.checksum = checksum_file(records_path);
  manifest.license_note = license_note;
  save_manifest(manifest, manifest_path);
  return manifest;
}

/// Loads the records a manifest points to, verifying checksum and counts.
inline std::vector<InstanceRecord> load_records_via_manifest(const std::string& manifest_path,
                                                             int expected_joints) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const auto records_file =
      std::filesystem::path(manifest_path).parent_path() / manifest.records_path;
  if (checksum_file(records_file.string()) != manifest.checksum)
    throw validation_error("manifest '" + manifest_path + "': checksum mismatch for '" +
                           manifest.records_path + "'");
  auto records = load_records(records_file.string(), expected_joints);
  std::map<std::string, std::size_t> counts;
  for (const auto& record : records) ++counts[to_string(record.split)];
  if (counts != manifest.split_counts)
    throw validation_error("manifest '" + manifest_path + "': split counts do not match records");
  return records;
}

}  // namespace ehps
