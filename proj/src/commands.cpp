#include "plm/commands.hpp"

#include <stdexcept>

namespace plm {

ContactFrameCommand decompose_command(const PayloadCommand& cmd, const ContactOffset& off) {
    ContactFrameCommand out;
    // (0,0,omega) x (ox,oy,oz) = (-omega*oy, omega*ox, 0)
    out.v = cmd.v + Vec2(-cmd.omega * off.p.y(), cmd.omega * off.p.x());
    out.omega = cmd.omega;
    out.height = cmd.height + off.p.z();
    return out;
}

ContactFrameCommand rotate_command_to_frame(const ContactFrameCommand& cmd, double yaw) {
    ContactFrameCommand out = cmd;
    const double c = std::cos(yaw), s = std::sin(yaw);
    // world->frame rotation of the planar velocity
    out.v = Vec2(c * cmd.v.x() + s * cmd.v.y(), -s * cmd.v.x() + c * cmd.v.y());
    return out;
}

PayloadCommand sample_eval_command(Rng& rng, const CommandRanges& r) {
    PayloadCommand cmd;
    cmd.v.x() = rng.uniform(r.vx(0), r.vx(1));
    cmd.v.y() = rng.uniform(r.vy(0), r.vy(1));
    cmd.omega = rng.uniform(r.omega(0), r.omega(1));
    cmd.height = rng.uniform(r.height(0), r.height(1));
    return cmd;
}

double sync_signal(double t) {
    if (t < 0.0) throw std::invalid_argument("sync_signal: negative time");
    return t < 5.0 ? t : 5.0;
}

void target_frame_integrate(TargetFrame& tf, const PayloadCommand& cmd, double dt,
                            double height_rate) {
    if (!(dt > 0.0)) throw std::invalid_argument("target_frame_integrate: dt must be positive");

    const double c = std::cos(tf.yaw), s = std::sin(tf.yaw);
    const double w = cmd.omega;
    double dx_b, dy_b;  // displacement in the frame's yaw coordinates
    if (std::abs(w) < 1e-9) {
        dx_b = cmd.v.x() * dt;
        dy_b = cmd.v.y() * dt;
    } else {
        // exact integral of R(w s) v over [0, dt]
        const double sw = std::sin(w * dt), cw = std::cos(w * dt);
        dx_b = (sw * cmd.v.x() - (1.0 - cw) * cmd.v.y()) / w;
        dy_b = ((1.0 - cw) * cmd.v.x() + sw * cmd.v.y()) / w;
    }
    tf.position.x() += c * dx_b - s * dy_b;
    tf.position.y() += s * dx_b + c * dy_b;
    tf.yaw += w * dt;

    const double dh = cmd.height - tf.height;
    const double max_step = height_rate * dt;
    tf.height += std::clamp(dh, -max_step, max_step);
}

Vec3 rigid_point_velocity(const TargetFrame& tf, const PayloadCommand& cmd, const Vec3& off) {
    const double c = std::cos(tf.yaw), s = std::sin(tf.yaw);
    const Vec2 vb = cmd.v + Vec2(-cmd.omega * off.y(), cmd.omega * off.x());
    return {c * vb.x() - s * vb.y(), s * vb.x() + c * vb.y(), 0.0};
}

}  // namespace plm
