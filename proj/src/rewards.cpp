#include "plm/rewards.hpp"

#include <cmath>
#include <stdexcept>

namespace plm {

RewardWeights schedule_weights(const ScheduleState& s, const RewardWeights& base,
                               const ScheduleTable& table) {
    const Phase p = s.phase;
    const double t = s.episode_time;
    RewardWeights w;
    w.contact_constellation = table.contact_constellation.active(p, t) ? base.contact_constellation : 0.0;
    w.base_tracking = table.base_tracking.active(p, t) ? base.base_tracking : 0.0;
    w.binary_contact = table.binary_contact.active(p, t) ? base.binary_contact : 0.0;
    w.height_tracking = table.height_tracking.active(p, t) ? base.height_tracking : 0.0;
    w.velocity_tracking = table.velocity_tracking.active(p, t) ? base.velocity_tracking : 0.0;
    w.torque_joint_motion = table.torque_joint_motion.active(p, t) ? base.torque_joint_motion : 0.0;
    w.action_smoothness = table.action_smoothness.active(p, t) ? base.action_smoothness : 0.0;
    w.leg_motion = table.leg_motion.active(p, t) ? base.leg_motion : 0.0;
    w.levelness = table.levelness.active(p, t) ? base.levelness : 0.0;
    w.payload_acceleration = table.payload_acceleration.active(p, t) ? base.payload_acceleration : 0.0;
    w.outside_range = table.outside_range.active(p, t) ? base.outside_range : 0.0;
    return w;
}

double r_contact(const Pose& pad_pose, const Pose& cf_pose) {
    return -constellation_distance(make_pad_constellation(pad_pose),
                                   make_cf_constellation(cf_pose));
}

double r_track(const Pose& base_pose, const Constellation& rigid_targets) {
    if (rigid_targets.points.empty()) return 0.0;
    return -constellation_distance(
        make_base_constellation(base_pose, rigid_targets.anchor), rigid_targets);
}

double exp_tracking_reward(double error, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("exp_tracking_reward: sigma must be > 0");
    return std::exp(-(error * error) / (sigma * sigma));
}

double binary_contact_reward(const ContactRecord& c) {
    return (c.in_contact && c.normal_force > 1.0) ? 1.0 : 0.0;
}

RewardBreakdown total_reward(const RobotRewardInputs& in, const RewardContext& ctx,
                             const RewardWeights& base, const KernelScales& scales,
                             const ScheduleTable& table) {
    const RewardWeights w = schedule_weights(ctx.schedule, base, table);
    RewardBreakdown out;

    if (w.contact_constellation != 0.0)
        out.contact_constellation = w.contact_constellation * r_contact(in.pad_pose, in.cf_pose);
    if (w.base_tracking != 0.0)
        out.base_tracking = w.base_tracking * r_track(in.base_pose, in.rigid_targets);
    if (w.binary_contact != 0.0)
        out.binary_contact = w.binary_contact * binary_contact_reward(in.contact);
    if (w.height_tracking != 0.0)
        out.height_tracking =
            w.height_tracking *
            exp_tracking_reward(ctx.height_actual - ctx.height_cmd, scales.height_sigma);
    if (w.velocity_tracking != 0.0) {
        const double err = std::sqrt((ctx.vel_actual - ctx.vel_cmd).squaredNorm() +
                                     (ctx.omega_actual - ctx.omega_cmd) *
                                         (ctx.omega_actual - ctx.omega_cmd));
        out.velocity_tracking =
            w.velocity_tracking * exp_tracking_reward(err, scales.velocity_sigma);
    }
    if (w.torque_joint_motion != 0.0) {
        const double lim = in.servo_force_limit > 0.0 ? in.servo_force_limit : 1.0;
        out.torque_joint_motion =
            -w.torque_joint_motion * in.servo_force.squaredNorm() / (lim * lim);
    }
    if (w.action_smoothness != 0.0 && in.action.size() == in.prev_action.size() &&
        in.action.size() > 0)
        out.action_smoothness =
            -w.action_smoothness * (in.action - in.prev_action).squaredNorm();
    if (w.leg_motion != 0.0)
        out.leg_motion = -w.leg_motion * (in.base_speed * in.base_speed +
                                          in.base_yaw_rate * in.base_yaw_rate);
    if (w.levelness != 0.0)
        out.levelness = -w.levelness * ctx.payload_tilt * ctx.payload_tilt;
    if (w.payload_acceleration != 0.0)
        out.payload_acceleration = -w.payload_acceleration * ctx.payload_accel.squaredNorm();
    if (w.outside_range != 0.0) {
        const double d = (in.pad_pose.position - in.cf_pose.position).norm();
        const double excess = std::max(0.0, d - ctx.outside_range_radius);
        out.outside_range = -w.outside_range * excess * excess;
    }

    out.total = out.contact_constellation + out.base_tracking + out.binary_contact +
                out.height_tracking + out.velocity_tracking + out.torque_joint_motion +
                out.action_smoothness + out.leg_motion + out.levelness +
                out.payload_acceleration + out.outside_range;
    return out;
}

}  // namespace plm
