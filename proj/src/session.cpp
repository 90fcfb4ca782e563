#include "gic/session.hpp"

#include "gic/control.hpp"
#include "gic/error.hpp"
#include "gic/json_io.hpp"
#include "gic/persistence.hpp"

namespace gic {

SessionCore::SessionCore(ManipulatorModel model, SessionConfig config)
    : model_(std::move(model)), config_(std::move(config)), rng_(config_.seed), case_(config_.initial_case) {
  model_.validate();
  if (config_.telemetry_every < 1) throw Error(ErrorCode::kInvalidArgument, "telemetry_every must be positive");
  reset(case_);
}

bool SessionCore::enqueue(nlohmann::json command) {
  std::lock_guard lock(queue_mutex_);
  if (queue_.size() >= config_.queue_capacity) {
    overflow_frames_.push_back(error_frame("command queue full", tick_));
    return false;
  }
  queue_.push_back({std::move(command), tick_});
  return true;
}

void SessionCore::reset(SceneCase c) {
  case_ = c;
  scene_ = apply_case(config_.base_scene, c);
  const Pose offset = sample_initial_offset(rng_, config_.episode.ranges);
  const EpisodeStart start = solve_start(model_, scene_, offset);
  sim_.joints = {start.q, VecX::Zero(model_.dof()), 0.0};
  contact_.reset();
  v_admittance_ = Twist();
  success_ = false;
  ++episode_;
  refresh_state();
}

void SessionCore::refresh_state() {
  terms_ = evaluate(model_, sim_.joints.q, sim_.joints.qdot);
  sim_.ee_pose = terms_.ee;
  sim_.ee_twist = Twist::from_vector(terms_.body_jacobian * sim_.joints.qdot, Frame::kBody);
  sim_.f_ext = contact_wrench(scene_, sim_.ee_pose, sim_.ee_twist, config_.episode.contact, &contact_);
  sim_.t = sim_.joints.t;
  success_ = success_ || success(sim_, scene_);
}

nlohmann::json SessionCore::error_frame(const std::string& message, std::uint64_t tick) {
  return {{"type", "error"}, {"tick", tick}, {"message", message}};
}

nlohmann::json SessionCore::apply(const Pending& p) {
  const nlohmann::json& cmd = p.command;
  nlohmann::json ack{{"type", "ack"}, {"tick", tick_}, {"received_tick", p.received_tick}};
  if (cmd.contains("id")) ack["id"] = cmd.at("id");
  try {
    if (!cmd.is_object() || !cmd.contains("type") || !cmd.at("type").is_string()) {
      throw Error(ErrorCode::kInvalidArgument, "command needs a string \"type\"");
    }
    const std::string type = cmd.at("type").get<std::string>();
    ack["command"] = type;
    if (type == "set_gains") {
      action_ = Action(vec6_from_json(cmd.at("a")));
      ack["a"] = vec6_to_json(action_.vector());
    } else if (type == "start_recording") {
      recording_ = true;
    } else if (type == "stop_recording") {
      recording_ = false;
    } else if (type == "reset") {
      reset(cmd.contains("case") ? scene_case_from_string(cmd.at("case").get<std::string>()) : case_);
      ack["case"] = to_string(case_);
    } else if (type == "save") {
      if (buffer_.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing recorded");
      DemoDataset data;
      data.records = buffer_;
      data.error_kind = ErrorKind::kGcev;
      data.source = "teleop";
      data.provenance = {{"scene", to_string(case_)}, {"seed", config_.seed}, {"episodes", episode_}};
      const std::string path = cmd.at("path").get<std::string>();
      save_dataset(path, data);
      ack["path"] = path;
      ack["count"] = buffer_.size();
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown command type '" + type + "'");
    }
  } catch (const Error& e) {
    return error_frame(e.what(), tick_);
  } catch (const nlohmann::json::exception& e) {
    return error_frame(std::string("malformed command: ") + e.what(), tick_);
  }
  ack["recording"] = recording_;
  return ack;
}

nlohmann::json SessionCore::telemetry(const Vec6& e_g) const {
  const HoleOffset off = hole_offset(sim_.ee_pose, scene_);
  return {{"type", "telemetry"},
          {"tick", tick_},
          {"t", sim_.t},
          {"case", to_string(case_)},
          {"pose", pose_to_json(sim_.ee_pose)},
          {"e_g", vec6_to_json(e_g)},
          {"f_ext", vec6_to_json(sim_.f_ext.vector())},
          {"a", vec6_to_json(action_.vector())},
          {"gains", vec6_to_json(action_to_gains(action_).stacked())},
          {"reward", reward(sim_, scene_)},
          {"depth", off.axial},
          {"records", buffer_.size()},
          {"phase", {{"recording", recording_}, {"success", success_}, {"contact", sim_.f_ext.vector().norm() > 0.0}}}};
}

std::vector<nlohmann::json> SessionCore::tick() {
  std::vector<nlohmann::json> frames;
  std::deque<Pending> pending;
  {
    std::lock_guard lock(queue_mutex_);
    pending.swap(queue_);
    frames.swap(overflow_frames_);
  }
  ++tick_;
  for (const auto& p : pending) frames.push_back(apply(p));

  try {
    const ImpedanceGains gains = action_to_gains(action_);
    const Mat6 jb = terms_.body_jacobian;
    v_admittance_ = gac_step(v_admittance_, sim_.ee_pose, scene_.hole_pose, config_.episode.admittance_inertia, gains,
                             sim_.f_ext, config_.episode.dt);
    const VecX torque = joint_velocity_pd(desired_joint_velocity(jb, v_admittance_), sim_.joints.qdot,
                                          config_.episode.joint_kv, terms_.gravity);
    const VecX external = jb.transpose() * sim_.f_ext.vector();
    sim_.joints = step(terms_, sim_.joints, torque, external, config_.episode.dt);
    refresh_state();
  } catch (const Error& e) {
    frames.push_back(error_frame(std::string(e.what()) + "; session reset", tick_));
    reset(case_);
  }

  if (tick_ % static_cast<std::uint64_t>(config_.telemetry_every) == 0) {
    const Vec6 e_g = gcev(sim_.ee_pose, scene_.hole_pose);
    nlohmann::json frame = telemetry(e_g);
    if (recording_) {
      buffer_.push_back({e_g, action_.vector(), sim_.t, episode_});
      frame["records"] = buffer_.size();
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace gic
