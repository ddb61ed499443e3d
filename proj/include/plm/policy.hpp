#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "plm/commands.hpp"
#include "plm/curriculum.hpp"
#include "plm/geometry.hpp"
#include "plm/rng.hpp"
#include "plm/world.hpp"

namespace plm {

inline constexpr int kActionDim = 9;        // pad delta (3 pos + 3 rot) + base (v2, omega)
inline constexpr int kObservationDim = 46;
inline constexpr int kObservationVersion = 3;  // bump when the layout changes

// ---------------------------------------------------------------------------
// observation

// Strictly robot-local inputs. cf_pose_b is the *held* contact-frame estimate
// (the runner refreshes it only when the observability mode allows); cf_fresh
// says whether that channel delivered new data this tick — the sensor's
// timestamp, not extra pose information.
struct Observation {
    Twist base_twist;            // body frame
    double base_height = 0.0;
    Pose pad_pose_b;             // pad in base frame
    Pose pad_target_b;           // current servo setpoint in base frame
    Vec3 servo_force_b = Vec3::Zero();
    Pose cf_pose_b;              // held contact-frame estimate, base frame
    bool cf_fresh = true;
    ContactFrameCommand cf_cmd;  // expressed in the contact frame's own axes
    double t_sync = 0.0;
    Eigen::VectorXd prev_action = Eigen::VectorXd::Zero(kActionDim);

    // Fixed 46-dim layout; servo force scaled by 1/60 to keep channels near
    // unit range.
    Eigen::VectorXd flatten() const;
};

// Assemble robot `robot`'s observation from the world snapshot, injecting
// sensing noise (position/rotation/twist/force channels) from rng. The
// held cf pose is passed in world coordinates and re-expressed in the current
// base frame (perfect odometry propagation of the last fix).
Observation build_observation(const WorldState& w, int robot, const Pose& held_cf_world,
                              bool cf_fresh, const ContactFrameCommand& cmd,
                              const Eigen::VectorXd& prev_action, const ObsNoise& noise,
                              Rng& rng);

// ---------------------------------------------------------------------------
// actions

struct ActionBounds {
    double pad_pos_delta = 0.02;  // m per tick
    double pad_rot_delta = 0.05;  // rad per tick
    double base_v = 0.6;          // m/s
    double base_omega = 0.6;      // rad/s
};

// Map a raw action in [-1,1]^9 (clipped if outside) onto the current servo
// setpoint: positional/rotational deltas on the pad target plus absolute base
// commands. Throws on dimension mismatch.
RobotAction integrate_action(const Eigen::VectorXd& raw, const Pose& current_target_rel,
                             const ActionBounds& bounds = {});

// ---------------------------------------------------------------------------
// policy network

struct PolicyConfig {
    int obs_dim = kObservationDim;
    int hidden = 64;
    int action_dim = kActionDim;
};

// One flat parameter vector shared by every robot regardless of team size.
struct PolicyParams {
    PolicyConfig cfg;
    Eigen::VectorXd theta;

    static int param_count(const PolicyConfig& cfg);
    static PolicyParams zeros(const PolicyConfig& cfg = {});
    static PolicyParams random_init(const PolicyConfig& cfg, Rng& rng, double scale = 0.2);
};

// Two hidden tanh layers, tanh output in [-1,1]^action_dim. Throws on
// dimension mismatch.
Eigen::VectorXd policy_forward(const PolicyParams& p, const Eigen::VectorXd& obs);

// Flat binary serialization with a self-describing header (dims, observation
// layout version, seed, iteration). load_params throws std::runtime_error on
// a corrupt or mismatched file.
void save_params(const std::string& path, const PolicyParams& p, std::uint64_t seed,
                 std::uint64_t iteration);
PolicyParams load_params(const std::string& path, std::uint64_t* seed = nullptr,
                         std::uint64_t* iteration = nullptr);

}  // namespace plm
