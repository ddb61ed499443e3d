#pragma once

#include "plm/geometry.hpp"
#include "plm/rng.hpp"

namespace plm {

// Team-level payload command: planar velocity (m/s, command-frame yaw
// coordinates), yaw rate (rad/s), and absolute height of the payload root
// above ground (m).
struct PayloadCommand {
    Vec2 v = Vec2::Zero();
    double omega = 0.0;
    double height = 0.0;
};

// Per-robot command for one contact frame, derived from a PayloadCommand.
// v is expressed in the same yaw frame as the payload command unless rotated
// explicitly (see rotate_command_to_frame).
struct ContactFrameCommand {
    Vec2 v = Vec2::Zero();
    double omega = 0.0;
    double height = 0.0;
};

// Fixed offset of a contact frame from the payload root, payload coordinates.
struct ContactOffset {
    Vec3 p = Vec3::Zero();
};

struct CommandRanges {
    Vec2 vx{-0.4, 0.4};
    Vec2 vy{-0.4, 0.4};
    Vec2 omega{-0.4, 0.4};
    Vec2 height{0.1, 0.3};
};

// Virtual commanded payload frame: yaw-only orientation, z = commanded root
// height. Owned by the episode loop; initialized at lift completion.
struct TargetFrame {
    Vec2 position = Vec2::Zero();
    double yaw = 0.0;
    double height = 0.0;

    Pose pose() const { return Pose::from_yaw(yaw, {position.x(), position.y(), height}); }
};

// State-free rigid decomposition of a payload command onto one contact frame:
//   v_cf = v_pl + omega_pl x p_offset   (planar cross product, z row dropped)
//   omega_cf = omega_pl
//   h_cf = h_pl + p_offset.z
ContactFrameCommand decompose_command(const PayloadCommand& cmd, const ContactOffset& off);

// Re-express a command's planar velocity in a frame rotated by `yaw` relative
// to the command frame (e.g. a contact frame's own coordinates). omega and
// height are yaw-invariant.
ContactFrameCommand rotate_command_to_frame(const ContactFrameCommand& cmd, double yaw);

// Uniform draw from the evaluation command pool. Deterministic given rng state.
PayloadCommand sample_eval_command(Rng& rng, const CommandRanges& ranges);

// Shared clock: min(t, 5). Negative t throws std::invalid_argument.
double sync_signal(double t);

// Advance the target frame by one step of the commanded twist. Planar part is
// the exact constant-twist (unicycle) update; height approaches cmd.height at
// a rate limit. dt > 0 required.
void target_frame_integrate(TargetFrame& tf, const PayloadCommand& cmd, double dt,
                            double height_rate = 0.25);

// Analytic world-frame velocity of a point rigidly attached to the target
// frame at payload-frame offset `off` (used by consistency tests and the
// rigid oracle): R(yaw) * (v + omega x off).
Vec3 rigid_point_velocity(const TargetFrame& tf, const PayloadCommand& cmd, const Vec3& off);

}  // namespace plm
