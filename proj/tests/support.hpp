#pragma once

// Shared fixtures for the unit and acceptance suites: a two-pad squeeze rig
// driven straight through World::step, and a sampling-based wrench-hull
// oracle independent of the simplex path used by force_closure_check.

#include <algorithm>
#include <cmath>
#include <vector>

#include "plm/rng.hpp"
#include "plm/world.hpp"

namespace plm::test {

struct SqueezeRig {
    WorldParams params;
    World world;
    std::vector<Pose> cf_world;     // contact frames frozen at spawn
    std::vector<Vec3> press_axis;   // world inward normals
    std::vector<double> depth;      // commanded setpoint depth past the surface
    double lift = 0.0;              // commanded pad-target rise

    explicit SqueezeRig(double mu, double mass = 2.0,
                        const Vec3& dims = Vec3(0.5, 0.4, 0.7)) {
        SceneSpec spec;
        spec.shape = PayloadShape::box(dims);
        spec.payload_mass = mass;
        spec.frames = even_arrangement(spec.shape, 2, 0.35);
        spec.friction = mu;
        params.friction = mu;
        params.resolve(mass, 2);
        world.params = params;
        world.state = spawn_scene(spec, params);
        const Pose root = payload_root_pose(world.state.payload);
        for (const auto& f : spec.frames) {
            cf_world.push_back(compose(root, f.pose_in_payload));
            press_axis.push_back(cf_world.back().rotate(Vec3::UnitX()));
            depth.push_back(0.0);
        }
    }

    void tick() {
        std::vector<RobotAction> actions(world.state.robots.size());
        for (size_t i = 0; i < actions.size(); ++i) {
            Pose target = cf_world[i];
            target.position += depth[i] * press_axis[i];
            target.position.z() += lift;
            actions[i].pad_target_rel =
                compose(inverse(world.state.robots[i].base_pose), target);
        }
        world.step(actions);
    }

    double normal_force(int robot) const {
        return world.state.contacts[size_t(robot)].normal_force;
    }

    // Integral force servo: settle both pads near the requested squeeze.
    void squeeze_to(double force, double seconds, double gain = 4e-5) {
        const int ticks = int(seconds / params.control_dt);
        for (int k = 0; k < ticks; ++k) {
            for (size_t i = 0; i < depth.size(); ++i) {
                depth[i] += gain * (force - normal_force(int(i)));
                depth[i] = std::clamp(depth[i], 0.0, 0.06);
            }
            tick();
        }
    }

    // Raise the pad targets at a fixed rate, holding the squeeze depth.
    void lift_by(double dz, double rate = 0.2) {
        const int ticks = int(dz / rate / params.control_dt);
        for (int k = 0; k < ticks; ++k) {
            lift += rate * params.control_dt;
            tick();
        }
    }

    void hold(double seconds) {
        const int ticks = int(seconds / params.control_dt);
        for (int k = 0; k < ticks; ++k) tick();
    }
};

// ---------------------------------------------------------------------------
// independent wrench-hull oracle

// Same published wrench convention as force_closure_check (pad corners, cone
// edges, torque scaled by the characteristic length), but interiority is
// decided by separating-direction search instead of the LP: the origin is
// strictly interior to conv(W) iff no direction u has max_k u.w_k <= 0.
inline std::vector<Eigen::Matrix<double, 6, 1>> cone_wrenches(
    std::span<const ContactPoint> frames, double mu, const Vec3& com,
    double pad_half_extent = 0.03, double char_len = 0.9, int cone_edges = 8) {
    std::vector<Eigen::Matrix<double, 6, 1>> out;
    for (const ContactPoint& f : frames) {
        const Vec3 n = f.inward_normal.normalized();
        // tangent basis built differently from the library's on purpose
        Vec3 helper = std::abs(n.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitY();
        const Vec3 t1 = n.cross(helper).normalized();
        const Vec3 t2 = n.cross(t1).normalized();
        for (int cx : {-1, 1})
            for (int cy : {-1, 1}) {
                const Vec3 p = f.point + pad_half_extent * (cx * t1 + cy * t2);
                for (int e = 0; e < cone_edges; ++e) {
                    const double a = 2.0 * M_PI * (double(e) + 0.5) / double(cone_edges);
                    const Vec3 d =
                        (n + mu * (std::cos(a) * t1 + std::sin(a) * t2)).normalized();
                    Eigen::Matrix<double, 6, 1> w;
                    w.head<3>() = d;
                    w.tail<3>() = (p - com).cross(d) / char_len;
                    out.push_back(w);
                }
            }
    }
    return out;
}

inline bool brute_force_closure(std::span<const ContactPoint> frames, double mu,
                                const Vec3& com) {
    const auto wr = cone_wrenches(frames, mu, com);
    if (wr.size() < 7) return false;

    auto support = [&](const Eigen::Matrix<double, 6, 1>& u) {
        double best = -1e300;
        for (const auto& w : wr) best = std::max(best, u.dot(w));
        return best;
    };

    // rank test: a deficient set cannot span the wrench space
    Eigen::MatrixXd m(6, long(wr.size()));
    for (long i = 0; i < long(wr.size()); ++i) m.col(i) = wr[size_t(i)];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    if (svd.singularValues()(5) <= 1e-8 * svd.singularValues()(0)) return false;

    Rng rng(0x5eedu);
    double worst = 1e300;
    Eigen::Matrix<double, 6, 1> worst_u = Eigen::Matrix<double, 6, 1>::Zero();
    auto consider = [&](Eigen::Matrix<double, 6, 1> u) {
        const double n = u.norm();
        if (n < 1e-12) return;
        u /= n;
        const double s = support(u);
        if (s < worst) {
            worst = s;
            worst_u = u;
        }
    };
    for (int axis = 0; axis < 6; ++axis)
        for (double sign : {-1.0, 1.0}) {
            Eigen::Matrix<double, 6, 1> u = Eigen::Matrix<double, 6, 1>::Zero();
            u(axis) = sign;
            consider(u);
        }
    for (int i = 0; i < 4096; ++i) {
        Eigen::Matrix<double, 6, 1> u;
        for (int j = 0; j < 6; ++j) u(j) = rng.normal();
        consider(u);
    }
    // local refinement of the tightest direction found
    double scale = 0.5;
    for (int it = 0; it < 600; ++it) {
        Eigen::Matrix<double, 6, 1> u = worst_u;
        for (int j = 0; j < 6; ++j) u(j) += scale * rng.normal();
        consider(u);
        scale = std::max(1e-4, scale * 0.987);
    }
    return worst > 1e-7;
}

}  // namespace plm::test
