#pragma once

#include <nlohmann/json.hpp>

#include "gic/liegroup.hpp"

namespace gic {

/// {"p":[x,y,z], "q":[w,x,y,z]} with w >= 0.
nlohmann::json pose_to_json(const Pose& g);
/// Accepts any nonzero quaternion and normalizes it.
Pose pose_from_json(const nlohmann::json& j);

/// Flat array in (linear, angular) order.
nlohmann::json vec6_to_json(const Vec6& v);
Vec6 vec6_from_json(const nlohmann::json& j);
Vec3 vec3_from_json(const nlohmann::json& j);

}  // namespace gic
