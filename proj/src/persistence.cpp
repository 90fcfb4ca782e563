#include "gic/persistence.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <openssl/evp.h>

#include "gic/error.hpp"
#include "gic/json_io.hpp"

namespace gic {

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return out;
  }
  return v;
}

void check_version(const nlohmann::json& doc) {
  if (!doc.contains("version") || !doc.at("version").is_number_integer()) {
    throw Error(ErrorCode::kCorruptPayload, "missing version field");
  }
  const int v = doc.at("version").get<int>();
  if (v != kFormatVersion) {
    throw Error(ErrorCode::kSchemaVersionMismatch,
                "file version " + std::to_string(v) + ", supported " + std::to_string(kFormatVersion));
  }
}

nlohmann::json parse_file(const std::string& path, ErrorCode missing) {
  std::ifstream in(path);
  if (!in) throw Error(missing, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptPayload, path + ": " + e.what());
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kInvalidArgument, "write failed for " + path);
}

}  // namespace

std::string base64_encode(const std::vector<double>& values) {
  std::vector<unsigned char> raw(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(values[i]));
    std::memcpy(raw.data() + 8 * i, &bits, 8);
  }
  std::string out(4 * ((raw.size() + 2) / 3), '\0');
  const int len = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), raw.data(), static_cast<int>(raw.size()));
  out.resize(static_cast<std::size_t>(len));
  return out;
}

std::vector<double> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::kCorruptPayload, "base64 length is not a multiple of 4");
  std::vector<unsigned char> raw(text.size() / 4 * 3);
  const int len = EVP_DecodeBlock(raw.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
  if (len < 0) throw Error(ErrorCode::kCorruptPayload, "invalid base64 payload");
  std::size_t bytes = static_cast<std::size_t>(len);
  // EVP_DecodeBlock keeps the zero bytes that padding stands for.
  if (!text.empty() && text.back() == '=') --bytes;
  if (text.size() > 1 && text[text.size() - 2] == '=') --bytes;
  if (bytes % 8 != 0) throw Error(ErrorCode::kCorruptPayload, "payload is not a whole number of doubles");
  std::vector<double> out(bytes / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, raw.data() + 8 * i, 8);
    out[i] = std::bit_cast<double>(to_little(bits));
  }
  return out;
}

nlohmann::json policy_to_json(const MlpPolicy& p) {
  std::vector<double> w, b;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const MatX& m = p.weights[l];
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) w.push_back(m(r, c));
    b.insert(b.end(), p.biases[l].data(), p.biases[l].data() + p.biases[l].size());
  }
  return {{"version", kFormatVersion},
          {"error_kind", to_string(p.error_kind)},
          {"arch", p.arch()},
          {"weights_b64", base64_encode(w)},
          {"biases_b64", base64_encode(b)}};
}

MlpPolicy policy_from_json(const nlohmann::json& doc) {
  check_version(doc);
  MlpPolicy p;
  try {
    p.error_kind = error_kind_from_string(doc.at("error_kind").get<std::string>());
    const auto arch = doc.at("arch").get<std::vector<int>>();
    if (arch.size() < 2) throw Error(ErrorCode::kCorruptPayload, "arch needs at least two widths");
    const auto w = base64_decode(doc.at("weights_b64").get<std::string>());
    const auto b = base64_decode(doc.at("biases_b64").get<std::string>());
    std::size_t wi = 0, bi = 0;
    for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
      if (arch[l] < 1 || arch[l + 1] < 1) throw Error(ErrorCode::kCorruptPayload, "arch widths must be positive");
      const auto rows = static_cast<std::size_t>(arch[l + 1]), cols = static_cast<std::size_t>(arch[l]);
      if (wi + rows * cols > w.size() || bi + rows > b.size()) {
        throw Error(ErrorCode::kCorruptPayload, "parameter payload shorter than arch requires");
      }
      MatX m(rows, cols);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = w[wi++];
      p.weights.push_back(std::move(m));
      p.biases.push_back(Eigen::Map<const VecX>(b.data() + bi, static_cast<Eigen::Index>(rows)));
      bi += rows;
    }
    if (wi != w.size() || bi != b.size()) throw Error(ErrorCode::kCorruptPayload, "parameter payload longer than arch");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptPayload, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) throw Error(ErrorCode::kCorruptPayload, e.what());
    throw;
  }
  return p;
}

void save_policy(const std::string& path, const MlpPolicy& p) { write_file(path, policy_to_json(p).dump(2) + "\n"); }

MlpPolicy load_policy(const std::string& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::kMissingPolicy, "no policy at " + path);
  return policy_from_json(parse_file(path, ErrorCode::kMissingPolicy));
}

void DemoDataset::validate() const {
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "dataset is empty");
  for (const auto& r : records) {
    if (!r.error.allFinite()) throw Error(ErrorCode::kInvalidArgument, "dataset error vector is not finite");
    if (!r.action.allFinite() || r.action.cwiseAbs().maxCoeff() > 1.0) {
      throw Error(ErrorCode::kInvalidArgument, "dataset action outside [-1, 1]");
    }
  }
}

nlohmann::json record_to_json(const DemoRecord& r) {
  return {{"e", vec6_to_json(r.error)}, {"a", vec6_to_json(r.action)}, {"t", r.t}, {"episode", r.episode_id}};
}

DemoRecord record_from_json(const nlohmann::json& doc) {
  try {
    DemoRecord r;
    r.error = vec6_from_json(doc.at("e"));
    r.action = vec6_from_json(doc.at("a"));
    r.t = doc.at("t").get<double>();
    r.episode_id = doc.at("episode").get<int>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptPayload, e.what());
  }
}

std::string dataset_meta_path(const std::string& path) { return path + ".meta.json"; }

void save_dataset(const std::string& path, const DemoDataset& data) {
  data.validate();
  std::string body;
  for (const auto& r : data.records) body += record_to_json(r).dump() + "\n";
  write_file(path, body);
  const nlohmann::json meta{{"version", kFormatVersion},
                            {"error_kind", to_string(data.error_kind)},
                            {"source", data.source},
                            {"count", data.records.size()},
                            {"provenance", data.provenance}};
  write_file(dataset_meta_path(path), meta.dump(2) + "\n");
}

DemoDataset load_dataset(const std::string& path) {
  const nlohmann::json meta = parse_file(dataset_meta_path(path), ErrorCode::kCorruptPayload);
  check_version(meta);
  DemoDataset data;
  std::size_t count = 0;
  try {
    data.error_kind = error_kind_from_string(meta.at("error_kind").get<std::string>());
    data.source = meta.at("source").get<std::string>();
    count = meta.at("count").get<std::size_t>();
    if (meta.contains("provenance")) data.provenance = meta.at("provenance");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptPayload, e.what());
  }
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kCorruptPayload, "cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorruptPayload, "record " + std::to_string(data.records.size()) + ": " + e.what());
    }
    data.records.push_back(record_from_json(doc));
  }
  if (data.records.size() != count) {
    throw Error(ErrorCode::kCorruptPayload, "expected " + std::to_string(count) + " records, found " +
                                                std::to_string(data.records.size()));
  }
  try {
    data.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptPayload, e.what());
  }
  return data;
}

}  // namespace gic
