#include "plm/scripted.hpp"

#include <algorithm>
#include <cmath>

namespace plm {

namespace {

// re-express a base-frame pose after the base moved for dt with body twist
// (v, omega): world-fixed content drifts backwards in body coordinates
Pose counter_propagate(const Pose& in_base, const Vec2& v_body, double omega, double dt) {
    Pose out = in_base;
    out.position -= Vec3(v_body.x(), v_body.y(), 0.0) * dt;
    const Quat undo = Quat(Eigen::AngleAxisd(-omega * dt, Vec3::UnitZ()));
    out.position = undo * out.position;
    out.orientation = (undo * out.orientation).normalized();
    return out;
}

Vec3 clamp_norm(const Vec3& v, double m) {
    const double n = v.norm();
    return n > m ? Vec3(v * (m / n)) : v;
}

}  // namespace

RobotAction scripted_plm_controller(const Observation& obs, ScriptedState& st, double dt,
                                    const ScriptedParams& p, const ActionBounds& bounds) {
    const double t = st.time;
    st.time += dt;
    const Pose& cf = obs.cf_pose_b;

    if (!st.home_set) {
        st.home_set = true;
        st.home_forward = cf.position.x();
        st.virtual_cf_b = cf;
    }

    Vec2 base_v = Vec2::Zero();
    double base_omega = 0.0;
    Pose desired;  // pad setpoint, base frame

    if (t < 5.0) {
        // ---- pinch: approach then squeeze, base parked
        st.virtual_cf_b = cf;  // estimate is authoritative while stationary
        double offset;         // along the cf +x (inward) axis
        if (t < p.press_start) {
            const double gap =
                p.approach_gap * std::max(0.0, 1.0 - t / p.approach_time);
            offset = -gap;
        } else {
            const double u =
                std::clamp((t - p.press_start) / (p.press_full - p.press_start), 0.0, 1.0);
            offset = u * p.press_depth;
        }
        desired = cf;
        desired.position += offset * cf.rotate(Vec3::UnitX());
    } else {
        // ---- move: dead-reckon the virtual contact frame
        if (!st.move_init) {
            st.move_init = true;
            st.virtual_cf_b = cf;
        }

        // the base moved since last tick; keep the virtual target world-consistent
        st.virtual_cf_b = counter_propagate(st.virtual_cf_b,
                                            Vec2(obs.base_twist.linear.head<2>()),
                                            obs.base_twist.angular.z(), dt);

        const double ramp = std::clamp((t - 5.0) / p.ramp_time, 0.0, 1.0);

        // commanded contact-frame twist (expressed in cf axes) and the base
        // feedforward it implies; both are throttled by the same feasibility
        // factor so the reference never outruns what this base can deliver
        const Vec3 v_cf_b =
            st.virtual_cf_b.rotate(Vec3(obs.cf_cmd.v.x(), obs.cf_cmd.v.y(), 0.0));
        // rotation sweeps payload corners past the bases, so stand off a bit
        // further when the command carries yaw rate — but never so far that
        // the pad reach margin (and with it the squeeze) is eaten up
        const double standoff = std::min(
            st.home_forward +
                p.rot_clearance * std::min(1.0, std::abs(obs.cf_cmd.omega) / 0.2),
            0.70);
        Vec2 v_corr(p.kp_pos * (st.virtual_cf_b.position.x() - standoff),
                    p.kp_pos * st.virtual_cf_b.position.y());
        if (v_corr.norm() > bounds.base_v) v_corr *= bounds.base_v / v_corr.norm();
        const Vec3 v_ff3 = v_cf_b + obs.cf_cmd.omega *
                                        Vec3::UnitZ().cross(-st.virtual_cf_b.position);
        const Vec2 v_ff(v_ff3.x(), v_ff3.y());
        const double budget = bounds.base_v - v_corr.norm();
        const double demand = ramp * v_ff.norm();
        const double feas =
            demand > budget ? (budget > 0.0 ? budget / demand : 0.0) : 1.0;
        // with fresh pose fixes the measurement reins the reference in, so
        // only a masked channel needs the advance throttled to base capacity
        const double adv = obs.cf_fresh ? ramp : feas * ramp;

        // advance by the (possibly throttled) commanded twist
        st.virtual_cf_b.position += adv * dt * v_cf_b;
        st.virtual_cf_b.orientation =
            (Quat(Eigen::AngleAxisd(adv * obs.cf_cmd.omega * dt, Vec3::UnitZ())) *
             st.virtual_cf_b.orientation)
                .normalized();

        // height: slew the target toward the commanded absolute cf height
        const double z_goal = obs.cf_cmd.height - obs.base_height;
        const double dz = std::clamp(z_goal - st.virtual_cf_b.position.z(),
                                     -p.height_rate * dt, p.height_rate * dt);
        st.virtual_cf_b.position.z() += dz;

        // pull the dead-reckoned target back toward measurement. With a fresh
        // fix that is the estimated frame; with the pose channel masked the
        // pad itself stands in: a gripping pad rides the payload surface, so
        // its pose is a proprioceptive contact-frame measurement (and with
        // contact lost the pad converges to its target, gating the term off).
        // planar only: the vertical lead over the measurement is the lift
        // itself, and correcting it away would pin the payload to the ground
        {
            const Vec3& meas =
                obs.cf_fresh ? cf.position : obs.pad_pose_b.position;
            Vec3 err = meas - st.virtual_cf_b.position;
            err.z() = 0.0;
            st.virtual_cf_b.position += clamp_norm(p.fix_gain * err, p.fix_step);
        }
        {
            // yaw only, same reason: a level setpoint is what rights a tilting
            // payload, so the measured tilt must not leak into the target.
            // masked-pose stand-in: the pressed pad is torqued toward flush
            // with the face, so its measured yaw leaks the face orientation;
            // follow it at reduced gain since the leak is partial
            const Quat& meas_q =
                obs.cf_fresh ? cf.orientation : obs.pad_pose_b.orientation;
            const double gain = obs.cf_fresh ? p.fix_gain : 0.4 * p.fix_gain;
            Vec3 rot_err = orientation_error(meas_q, st.virtual_cf_b.orientation);
            rot_err.x() = 0.0;
            rot_err.y() = 0.0;
            st.virtual_cf_b.orientation =
                (quat_exp(clamp_norm(gain * rot_err, 2.5 * p.fix_step)) *
                 st.virtual_cf_b.orientation)
                    .normalized();
        }

        // squeeze-force servo: dead reckoning slowly drifts the press depth,
        // so trim it against the measured force along the press axis
        const Vec3 press_axis = st.virtual_cf_b.rotate(Vec3::UnitX());
        const double squeeze = obs.servo_force_b.dot(press_axis);
        st.press_adj += p.force_gain * (p.press_force - squeeze) * dt;
        st.press_adj = std::clamp(st.press_adj, -0.4 * p.press_depth, 0.8 * p.press_depth);

        desired = st.virtual_cf_b;
        desired.position += (p.press_depth + st.press_adj) * press_axis;

        // ---- base: station keeping first, throttled feedforward with the
        // leftover speed budget. An infeasibly fast reference then degrades
        // tracking instead of walking the base out of pad reach.
        const Vec2 v_cmd = v_corr + feas * ramp * v_ff;

        const double bearing =
            std::atan2(st.virtual_cf_b.position.y(), st.virtual_cf_b.position.x());
        const double heading = st.virtual_cf_b.yaw();
        double w_cmd =
            (obs.cf_fresh ? 1.0 : feas) * obs.cf_cmd.omega +
            p.kp_yaw * (0.6 * bearing + 0.4 * heading);
        w_cmd = std::clamp(w_cmd, -bounds.base_omega, bounds.base_omega);
        base_v = v_cmd;
        base_omega = ramp * w_cmd;
    }

    // emit as a rate-limited setpoint change, like any other action
    RobotAction a;
    const Pose& cur = obs.pad_target_b;
    Vec3 dp = desired.position - cur.position;
    dp = dp.cwiseMax(-bounds.pad_pos_delta).cwiseMin(bounds.pad_pos_delta);
    Vec3 drot = orientation_error(desired.orientation, cur.orientation);
    drot = clamp_norm(drot, bounds.pad_rot_delta);
    a.pad_target_rel.position = cur.position + dp;
    a.pad_target_rel.orientation = (quat_exp(drot) * cur.orientation).normalized();
    a.base_v = base_v;
    a.base_omega = base_omega;
    return a;
}

}  // namespace plm
