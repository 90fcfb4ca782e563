#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gic/control.hpp"

namespace gic {

struct DemoRecord {
  Vec6 error = Vec6::Zero();
  Vec6 action = Vec6::Zero();
  double t = 0.0;
  int episode_id = 0;
};

struct DemoDataset {
  std::vector<DemoRecord> records;
  ErrorKind error_kind = ErrorKind::kGcev;
  std::string source = "scripted";  // or "teleop"
  nlohmann::json provenance = nlohmann::json::object();

  /// Throws InvalidArgument when empty, non-finite or out of action bounds.
  void validate() const;
};

}  // namespace gic
