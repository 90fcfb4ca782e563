#include "gic/json_io.hpp"

#include "gic/error.hpp"

namespace gic {

namespace {

void require_array(const nlohmann::json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n) {
    throw Error(ErrorCode::kCorruptPayload,
                std::string(what) + " must be an array of " + std::to_string(n) + " numbers");
  }
}

}  // namespace

nlohmann::json pose_to_json(const Pose& g) {
  const Eigen::Quaterniond q = g.rot.quaternion();
  return {{"p", {g.pos.x(), g.pos.y(), g.pos.z()}}, {"q", {q.w(), q.x(), q.y(), q.z()}}};
}

Pose pose_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("p") || !j.contains("q")) {
    throw Error(ErrorCode::kCorruptPayload, "pose must have \"p\" and \"q\"");
  }
  const Vec3 p = vec3_from_json(j.at("p"));
  require_array(j.at("q"), 4, "pose.q");
  const auto& q = j.at("q");
  const Eigen::Quaterniond quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                                q[3].get<double>());
  if (quat.norm() < 1e-12) throw Error(ErrorCode::kCorruptPayload, "zero quaternion");
  return {Rotation::from_quaternion(quat), p};
}

nlohmann::json vec6_to_json(const Vec6& v) {
  auto out = nlohmann::json::array();
  for (int i = 0; i < 6; ++i) out.push_back(v[i]);
  return out;
}

Vec6 vec6_from_json(const nlohmann::json& j) {
  require_array(j, 6, "6-vector");
  Vec6 v;
  for (int i = 0; i < 6; ++i) v[i] = j[i].get<double>();
  return v;
}

Vec3 vec3_from_json(const nlohmann::json& j) {
  require_array(j, 3, "3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace gic
