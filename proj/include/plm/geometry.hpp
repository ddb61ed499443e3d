#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <array>
#include <vector>

namespace plm {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Rigid transform. Quaternions are scalar-first (w, x, y, z) everywhere;
// serialized poses are 7-arrays [x, y, z, qw, qx, qy, qz].
struct Pose {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();

    static Pose identity() { return {}; }
    static Pose from_yaw(double yaw, const Vec3& p = Vec3::Zero()) {
        return {p, Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()))};
    }
    static Pose from_axis_angle(const Vec3& axis, double angle, const Vec3& p = Vec3::Zero()) {
        return {p, Quat(Eigen::AngleAxisd(angle, axis.normalized()))};
    }

    Vec3 transform_point(const Vec3& q) const { return orientation * q + position; }
    Vec3 rotate(const Vec3& v) const { return orientation * v; }
    double yaw() const {
        const Mat3 r = orientation.toRotationMatrix();
        return std::atan2(r(1, 0), r(0, 0));
    }

    std::array<double, 7> serialize() const {
        return {position.x(), position.y(), position.z(),
                orientation.w(), orientation.x(), orientation.y(), orientation.z()};
    }
    static Pose deserialize(const std::array<double, 7>& a) {
        Pose p{{a[0], a[1], a[2]}, Quat(a[3], a[4], a[5], a[6])};
        p.orientation.normalize();
        return p;
    }
};

// compose(a, b): apply b first, then a (world_from_b = world_from_a * a_from_b).
// Renormalizes so unit-norm survives long composition chains.
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);
Vec3 transform_point(const Pose& p, const Vec3& q);

// Minimal rotation vector (axis*angle, radians) taking `from` to `to`, shortest path.
Vec3 orientation_error(const Quat& to, const Quat& from);
// Quaternion from a rotation vector.
Quat quat_exp(const Vec3& rotvec);

struct Twist {
    Vec3 linear = Vec3::Zero();
    Vec3 angular = Vec3::Zero();
};

// What a constellation is anchored to. Distances only compare like-for-like
// pairs (pad vs contact_frame, base vs rigid_target).
enum class AnchorFrame { pad, base, contact_frame, rigid_target };

// Ordered landmark set in world coordinates.
struct Constellation {
    std::vector<Vec3> points;
    AnchorFrame anchor = AnchorFrame::pad;
};

// Mean squared landmark error: (1/K) * sum_i |p_i - q_i|^2. Index-matched,
// no correspondence search. Throws std::invalid_argument on mismatched sizes
// or empty input.
double constellation_distance(const Constellation& a, const Constellation& b);

// Five colinear points from the frame origin along local +x at offsets
// {0, 0.125, 0.25, 0.375, 0.5} m. For a pad, +x is the press direction
// (outward from the pad face); for a contact frame, +x is the inward surface
// normal. A flush pad therefore matches its contact frame point-for-point.
inline constexpr std::array<double, 5> kNormalLineOffsets{0.0, 0.125, 0.25, 0.375, 0.5};
Constellation make_pad_constellation(const Pose& pad_pose);
Constellation make_cf_constellation(const Pose& cf_pose);

// Three non-collinear points: corners of a 10 cm cube edge triad at the base
// origin — {R*(0.1,0,0), R*(0,0.1,0), R*(0,0,0.1)} + p.
Constellation make_base_constellation(const Pose& base_pose, AnchorFrame anchor = AnchorFrame::base);

// Least-squares rigid alignment (Kabsch): returns T minimizing
// sum_i |T(p_i) - q_i|^2. Requires K >= 3 non-collinear points; collinear or
// degenerate input throws std::invalid_argument. Diagnostic use only — the
// reward path never solves for transforms.
Pose best_fit_transform(const Constellation& from, const Constellation& to);

}  // namespace plm
