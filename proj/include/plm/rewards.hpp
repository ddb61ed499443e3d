#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>

#include "plm/commands.hpp"
#include "plm/geometry.hpp"
#include "plm/world.hpp"

namespace plm {

// ---------------------------------------------------------------------------
// weights & schedule

struct RewardWeights {
    double contact_constellation = 2.0;
    double base_tracking = 2.0;
    double binary_contact = 0.5;
    double height_tracking = 1.0;
    double velocity_tracking = 1.5;
    double torque_joint_motion = 0.05;
    double action_smoothness = 0.1;
    double leg_motion = 0.05;
    double levelness = 0.1;
    double payload_acceleration = 0.01;
    double outside_range = 0.1;
};

struct KernelScales {
    double height_sigma = 0.1;    // m
    double velocity_sigma = 0.25; // m/s (also rad/s for the yaw-rate part)
};

enum class Phase : int { pinch = 1, pinch_lift = 2, full_transport = 3 };

struct ScheduleState {
    Phase phase = Phase::pinch;
    double episode_time = 0.0;
};

// Activation window for one term: active iff the phase bit is set and
// t in [t_min, t_max).
struct TermWindow {
    std::uint8_t phases = 0b111;  // bit 0 = pinch, 1 = pinch_lift, 2 = full_transport
    double t_min = 0.0;
    double t_max = std::numeric_limits<double>::infinity();

    bool active(Phase p, double t) const {
        return (phases >> (int(p) - 1)) & 1u && t >= t_min && t < t_max;
    }
};

// When each term is active within an episode. The default table: constellation
// contact, binary contact, and the regularizers run always; leg-motion penalty
// only during contact formation (first 4 s) and never in the last phase;
// height/levelness join after the lift deadline (t = 5); velocity and base
// tracking plus the payload-acceleration penalty only in the full-transport
// phase after t = 5.
struct ScheduleTable {
    TermWindow contact_constellation{};
    TermWindow base_tracking{0b100, 5.0};
    TermWindow binary_contact{};
    TermWindow height_tracking{0b110, 5.0};
    TermWindow velocity_tracking{0b100, 5.0};
    TermWindow torque_joint_motion{};
    TermWindow action_smoothness{};
    TermWindow leg_motion{0b011, 0.0, 4.0};
    TermWindow levelness{0b110, 5.0};
    TermWindow payload_acceleration{0b100, 5.0};
    TermWindow outside_range{};
};

// Mask the base weights down to the terms active at schedule state s.
RewardWeights schedule_weights(const ScheduleState& s, const RewardWeights& base,
                               const ScheduleTable& table = {});

// ---------------------------------------------------------------------------
// individual terms

// Pad-to-contact-frame alignment: negative mean squared landmark error of the
// two 5-point normal-line constellations. 0 exactly at flush contact.
double r_contact(const Pose& pad_pose, const Pose& cf_pose);

// Base tracking of the rigid-attachment pose: negative mean squared landmark
// error between the base's 3-point constellation and its rigid-motion targets.
double r_track(const Pose& base_pose, const Constellation& rigid_targets);

// exp(-error^2 / sigma^2), in (0,1], strictly decreasing in |error|.
double exp_tracking_reward(double error, double sigma);

// 1 iff in contact with more than 1 N of normal force.
double binary_contact_reward(const ContactRecord& c);

// ---------------------------------------------------------------------------
// per-tick composition

// Snapshot shared by all robots for one reward evaluation.
struct RewardContext {
    ScheduleState schedule;
    double height_cmd = 0.0;       // commanded payload root height (m)
    Vec2 vel_cmd = Vec2::Zero();   // commanded planar velocity, payload frame (m/s)
    double omega_cmd = 0.0;        // commanded yaw rate (rad/s)
    double height_actual = 0.0;    // payload root height
    Vec2 vel_actual = Vec2::Zero();// payload planar velocity, payload frame
    double omega_actual = 0.0;
    double payload_tilt = 0.0;     // total tilt angle of the payload (rad)
    Vec3 payload_accel = Vec3::Zero();  // finite-difference linear acceleration
    double outside_range_radius = 0.2;  // pad leash around the assigned frame (m)
};

// Per-robot inputs (all robot-local apart from the payload-wide context).
struct RobotRewardInputs {
    Pose pad_pose;                 // world
    Pose cf_pose;                  // world, ground truth
    Pose base_pose;                // world
    Constellation rigid_targets;   // world; empty -> tracking term reads 0
    ContactRecord contact;
    Vec3 servo_force = Vec3::Zero();
    double servo_force_limit = 60.0;
    Eigen::VectorXd action;        // this tick
    Eigen::VectorXd prev_action;   // last tick (same size)
    double base_speed = 0.0;       // planar base speed (m/s)
    double base_yaw_rate = 0.0;
};

// Weighted per-term contributions; total is their exact sum.
struct RewardBreakdown {
    double contact_constellation = 0.0;
    double base_tracking = 0.0;
    double binary_contact = 0.0;
    double height_tracking = 0.0;
    double velocity_tracking = 0.0;
    double torque_joint_motion = 0.0;
    double action_smoothness = 0.0;
    double leg_motion = 0.0;
    double levelness = 0.0;
    double payload_acceleration = 0.0;
    double outside_range = 0.0;
    double total = 0.0;
};

RewardBreakdown total_reward(const RobotRewardInputs& in, const RewardContext& ctx,
                             const RewardWeights& base, const KernelScales& scales,
                             const ScheduleTable& table = {});

}  // namespace plm
