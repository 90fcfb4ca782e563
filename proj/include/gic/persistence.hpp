#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "gic/dataset.hpp"
#include "gic/mlp.hpp"

namespace gic {

inline constexpr int kFormatVersion = 1;

/// {"version", "error_kind", "arch", "weights_b64", "biases_b64"}; each
/// payload is the layers' parameters (weights row-major, out × in) as
/// little-endian doubles.
nlohmann::json policy_to_json(const MlpPolicy& p);
MlpPolicy policy_from_json(const nlohmann::json& doc);
void save_policy(const std::string& path, const MlpPolicy& p);
/// Throws MissingPolicy when the file does not exist.
MlpPolicy load_policy(const std::string& path);

/// Records go to `path` as one JSON object per line; metadata goes to
/// `path + ".meta.json"`.
void save_dataset(const std::string& path, const DemoDataset& data);
DemoDataset load_dataset(const std::string& path);
std::string dataset_meta_path(const std::string& path);

nlohmann::json record_to_json(const DemoRecord& r);
DemoRecord record_from_json(const nlohmann::json& doc);

std::string base64_encode(const std::vector<double>& values);
std::vector<double> base64_decode(const std::string& text);

}  // namespace gic
