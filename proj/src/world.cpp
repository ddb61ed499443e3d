#include "plm/world.hpp"

#include <algorithm>
#include <cmath>

#include "plm/simplex.hpp"

namespace plm {

// ---------------------------------------------------------------------------
// parameter resolution

void WorldParams::resolve(double payload_mass, int n_robots) {
    // lighter payloads need shorter substeps to keep explicit penalty springs
    // inside the semi-implicit stability region
    int mult = 1;
    if (payload_mass < 0.25)
        mult = 8;  // ~60 substeps at the default 8
    else if (payload_mass < 0.5)
        mult = 3;
    else if (payload_mass < 1.0)
        mult = 2;
    substeps_used = substeps * mult;
    const double dt_sub = control_dt / double(substeps_used);

    // rest penetration floor: keep heavy payloads from sinking through the 5 mm
    // bound (4 supporting points, ~2 mm target)
    ground_stiffness = std::max(contact_stiffness, payload_mass * gravity / (4.0 * 0.002));

    servo_kd = 2.0 * std::sqrt(pad.kp * pad.mass);
    servo_rot_kd = 2.0 * std::sqrt(pad.rot_kp * pad.rot_inertia);

    // damping stability clamp: sum(c)*dt/m <= ~1.7 for the worst concurrent
    // damper count on the payload and on a single pad
    const double payload_dampers = 2.0 * double(4 * n_robots + 4);
    const double payload_cap = 1.7 * payload_mass / (payload_dampers * dt_sub);
    const double pad_cap = (1.7 * pad.mass / dt_sub - servo_kd) / 8.0;
    damping_used = std::max(1e-3, std::min({contact_damping, payload_cap, pad_cap}));
}

// ---------------------------------------------------------------------------
// shape queries

static double support_distance(const PayloadShape& s, const Quat& q) {
    // distance from body origin to the lowest point for this orientation
    if (s.kind == PayloadShape::Kind::box) {
        const Vec3 h = 0.5 * s.box_dims;
        double lowest = 0.0;
        for (int sx : {-1, 1})
            for (int sy : {-1, 1})
                for (int sz : {-1, 1}) {
                    const Vec3 c = q * Vec3(sx * h.x(), sy * h.y(), sz * h.z());
                    lowest = std::min(lowest, c.z());
                }
        return -lowest;
    }
    const Vec3 axis = q * Vec3::UnitZ();
    const double az = std::abs(axis.z());
    // cap rim lowest point: half-length along axis plus radius of the tilted rim
    return 0.5 * s.length * az + s.radius * std::sqrt(std::max(0.0, 1.0 - az * az));
}

SurfaceHit payload_surface_penetration(const PayloadBody& body, const Vec3& point_w) {
    SurfaceHit out;
    const Vec3 q = body.pose.orientation.conjugate() * (point_w - body.pose.position);
    if (body.shape.kind == PayloadShape::Kind::box) {
        const Vec3 h = 0.5 * body.shape.box_dims;
        if (std::abs(q.x()) > h.x() || std::abs(q.y()) > h.y() || std::abs(q.z()) > h.z())
            return out;
        int axis = 0;
        double depth = h.x() - std::abs(q.x());
        for (int i = 1; i < 3; ++i) {
            const double d = h(i) - std::abs(q(i));
            if (d < depth) {
                depth = d;
                axis = i;
            }
        }
        Vec3 n_b = Vec3::Zero();
        n_b(axis) = q(axis) >= 0.0 ? 1.0 : -1.0;
        out.hit = true;
        out.depth = depth;
        out.normal = body.pose.orientation * n_b;
        return out;
    }
    // cylinder, axis = body z
    const double hl = 0.5 * body.shape.length;
    const double rho = std::hypot(q.x(), q.y());
    if (std::abs(q.z()) > hl || rho > body.shape.radius) return out;
    const double lateral_depth = body.shape.radius - rho;
    const double cap_depth = hl - std::abs(q.z());
    out.hit = true;
    if (lateral_depth <= cap_depth && rho > 1e-9) {
        out.depth = lateral_depth;
        out.normal = body.pose.orientation * Vec3(q.x() / rho, q.y() / rho, 0.0);
    } else {
        out.depth = cap_depth;
        out.normal = body.pose.orientation * Vec3(0, 0, q.z() >= 0.0 ? 1.0 : -1.0);
    }
    return out;
}

std::vector<Vec3> ground_contact_points(const PayloadBody& body) {
    std::vector<Vec3> pts;
    if (body.shape.kind == PayloadShape::Kind::box) {
        const Vec3 h = 0.5 * body.shape.box_dims;
        pts.reserve(8);
        for (int sx : {-1, 1})
            for (int sy : {-1, 1})
                for (int sz : {-1, 1})
                    pts.push_back(
                        body.pose.transform_point({sx * h.x(), sy * h.y(), sz * h.z()}));
        return pts;
    }
    const double hl = 0.5 * body.shape.length;
    const double r = body.shape.radius;
    constexpr int kRim = 16;
    pts.reserve(2 * kRim + 5);
    for (int end : {-1, 1})
        for (int i = 0; i < kRim; ++i) {
            const double a = 2.0 * M_PI * double(i) / double(kRim);
            pts.push_back(
                body.pose.transform_point({r * std::cos(a), r * std::sin(a), end * hl}));
        }
    // bottom generatrix for lying cylinders
    const Vec3 axis_w = body.pose.rotate(Vec3::UnitZ());
    Vec3 down = Vec3(0, 0, -1) - axis_w * (Vec3(0, 0, -1).dot(axis_w));
    if (down.norm() > 1e-6) {
        down.normalize();
        for (double s : {-1.0, -0.5, 0.0, 0.5, 1.0})
            pts.push_back(body.pose.position + s * hl * axis_w + r * down);
    } else {
        for (int i = 0; i < 5; ++i) pts.push_back(body.pose.position);  // keep slot count stable
    }
    return pts;
}

// ---------------------------------------------------------------------------
// arrangements

namespace {

struct PerimeterPoint {
    Vec2 p;        // footprint coordinates
    Vec2 inward;   // unit inward normal
    double arc;
};

// Clockwise perimeter walk in top view, starting at the top-right corner
// (+hx, +hy). Faces in order: +x, -y, -x, +y.
PerimeterPoint box_perimeter_point(double ex, double ey, double s) {
    const double hx = 0.5 * ex, hy = 0.5 * ey;
    const double per = 2.0 * (ex + ey);
    s = std::fmod(std::fmod(s, per) + per, per);
    if (s < ey) return {{hx, hy - s}, {-1.0, 0.0}, s};
    s -= ey;
    if (s < ex) return {{hx - s, -hy}, {0.0, 1.0}, s + ey};
    s -= ex;
    if (s < ey) return {{-hx, -hy + s}, {1.0, 0.0}, s + ey + ex};
    s -= ey;
    return {{-hx + s, hy}, {0.0, -1.0}, s + 2.0 * ey + ex};
}

double corner_distance(double ex, double ey, double s) {
    const double per = 2.0 * (ex + ey);
    const std::array<double, 4> corners{0.0, ey, ey + ex, 2.0 * ey + ex};
    double best = per;
    for (double c : corners) {
        double d = std::abs(std::fmod(std::fmod(s - c, per) + per, per));
        d = std::min(d, per - d);
        best = std::min(best, d);
    }
    return best;
}

Pose frame_from_footprint(const Vec2& p, const Vec2& inward, double height) {
    Mat3 r;
    const Vec3 x(inward.x(), inward.y(), 0.0);
    const Vec3 z = Vec3::UnitZ();
    const Vec3 y = z.cross(x);
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = z;
    Pose out;
    out.position = Vec3(p.x(), p.y(), height);
    out.orientation = Quat(r);
    out.orientation.normalize();
    return out;
}

}  // namespace

double lateral_perimeter(const PayloadShape& shape) {
    if (shape.kind == PayloadShape::Kind::box)
        return 2.0 * (shape.box_dims.x() + shape.box_dims.y());
    return 2.0 * M_PI * shape.radius;
}

Pose surface_frame_at(const PayloadShape& shape, double arc, double height) {
    if (shape.kind == PayloadShape::Kind::box) {
        const auto pt = box_perimeter_point(shape.box_dims.x(), shape.box_dims.y(), arc);
        return frame_from_footprint(pt.p, pt.inward, height);
    }
    const double phi = 0.5 * M_PI - arc / shape.radius;
    const Vec2 p(shape.radius * std::cos(phi), shape.radius * std::sin(phi));
    return frame_from_footprint(p, -p.normalized(), height);
}

std::vector<ContactFramePlacement> even_arrangement(const PayloadShape& shape, int n,
                                                    double contact_height) {
    if (n < 1) throw std::invalid_argument("even_arrangement: n < 1");
    std::vector<ContactFramePlacement> frames;
    frames.reserve(n);

    if (shape.kind == PayloadShape::Kind::cylinder) {
        for (int i = 0; i < n; ++i) {
            const double phi = 0.5 * M_PI - 2.0 * M_PI * (double(i) + 0.5) / double(n);
            const Vec2 p(shape.radius * std::cos(phi), shape.radius * std::sin(phi));
            frames.push_back({frame_from_footprint(p, -p.normalized(), contact_height)});
        }
        return frames;
    }

    const double ex = shape.box_dims.x(), ey = shape.box_dims.y();
    const double per = 2.0 * (ex + ey);

    if (n == 3) {
        // asymmetric two-against-one on the long face pair (even arc spacing
        // cannot put two robots on one face when spacing > face width)
        const bool long_is_px = ey >= ex;  // +x/-x faces have width ey
        std::array<PerimeterPoint, 3> pts;
        if (long_is_px) {
            pts[0] = {{0.5 * ex, 0.25 * ey}, {-1, 0}, 0};
            pts[1] = {{0.5 * ex, -0.25 * ey}, {-1, 0}, 0};
            pts[2] = {{-0.5 * ex, 0.0}, {1, 0}, 0};
        } else {
            pts[0] = {{0.25 * ex, -0.5 * ey}, {0, 1}, 0};
            pts[1] = {{-0.25 * ex, -0.5 * ey}, {0, 1}, 0};
            pts[2] = {{0.0, 0.5 * ey}, {0, -1}, 0};
        }
        for (const auto& pt : pts)
            frames.push_back({frame_from_footprint(pt.p, pt.inward, contact_height)});
        return frames;
    }

    // even arc spacing; pick the phase that keeps everyone farthest from corners
    const double spacing = per / double(n);
    double best_offset = 0.0, best_score = -1.0;
    constexpr int kGrid = 720;
    for (int g = 0; g < kGrid; ++g) {
        const double off = spacing * double(g) / double(kGrid);
        double score = per;
        for (int r = 0; r < n; ++r)
            score = std::min(score, corner_distance(ex, ey, off + spacing * double(r)));
        if (score > best_score + 1e-12) {
            best_score = score;
            best_offset = off;
        }
    }
    for (int r = 0; r < n; ++r) {
        const auto pt = box_perimeter_point(ex, ey, best_offset + spacing * double(r));
        frames.push_back({frame_from_footprint(pt.p, pt.inward, contact_height)});
    }
    return frames;
}

// ---------------------------------------------------------------------------
// spawning

static Mat3 shape_inertia(const PayloadShape& s, double m) {
    Mat3 i = Mat3::Zero();
    if (s.kind == PayloadShape::Kind::box) {
        const Vec3 d = s.box_dims;
        i(0, 0) = m / 12.0 * (d.y() * d.y() + d.z() * d.z());
        i(1, 1) = m / 12.0 * (d.x() * d.x() + d.z() * d.z());
        i(2, 2) = m / 12.0 * (d.x() * d.x() + d.y() * d.y());
    } else {
        i(0, 0) = i(1, 1) = m / 12.0 * (3.0 * s.radius * s.radius + s.length * s.length);
        i(2, 2) = 0.5 * m * s.radius * s.radius;
    }
    return i;
}

Pose payload_root_pose(const PayloadBody& body) {
    Pose root;
    root.position = body.root_offset_b;
    return compose(body.pose, root);
}

WorldState spawn_scene(const SceneSpec& spec, const WorldParams& params) {
    if (spec.frames.empty()) throw std::invalid_argument("spawn_scene: no contact frames");

    WorldState w;
    w.payload.shape = spec.shape;
    w.payload.mass = spec.payload_mass;
    w.payload.inertia_b = shape_inertia(spec.shape, spec.payload_mass);
    w.payload.pose = spec.payload_pose;
    const double support = support_distance(spec.shape, w.payload.pose.orientation);
    if (w.payload.pose.position.z() <= 0.0) w.payload.pose.position.z() = support;
    w.payload.root_offset_b =
        w.payload.pose.orientation.conjugate() * Vec3(0, 0, -support);

    const Pose root = payload_root_pose(w.payload);
    const int n = int(spec.frames.size());
    w.robots.resize(n);
    w.contacts.resize(n);
    w.pad_anchors.resize(n);
    w.ground_anchors.resize(ground_contact_points(w.payload).size());

    for (int r = 0; r < n; ++r) {
        RobotBody& rb = w.robots[r];
        const Pose cf_w = compose(root, spec.frames[r].pose_in_payload);
        Vec3 inward = cf_w.rotate(Vec3::UnitX());
        inward.z() = 0.0;
        if (inward.norm() < 1e-6)
            throw std::invalid_argument("spawn_scene: contact normal has no horizontal component");
        inward.normalize();

        const Vec3 noise = r < int(spec.base_offsets.size()) ? spec.base_offsets[r] : Vec3::Zero();
        rb.stance_height =
            r < int(spec.stance_heights.size()) ? spec.stance_heights[r] : 0.4;

        const Vec2 base_xy = Vec2(cf_w.position.x(), cf_w.position.y()) -
                             spec.base_standoff * Vec2(inward.x(), inward.y()) +
                             Vec2(noise.x(), noise.y());
        const double yaw = std::atan2(inward.y(), inward.x()) + noise.z();
        rb.base_pose = Pose::from_yaw(yaw, {base_xy.x(), base_xy.y(), rb.stance_height});

        // pad spawns at a home setpoint short of the surface, at cf height
        const Pose base_inv = inverse(rb.base_pose);
        const Vec3 cf_in_base = base_inv.transform_point(cf_w.position);
        if (cf_in_base.x() < params.reach.forward(0) || cf_in_base.x() > params.reach.forward(1) ||
            std::abs(cf_in_base.y()) > params.reach.lateral(1) ||
            cf_w.position.z() < params.reach.vertical(0) ||
            cf_w.position.z() > params.reach.vertical(1))
            throw std::invalid_argument("spawn_scene: contact frame outside pad reach");

        Pose home;
        home.position = cf_in_base - Vec3(0.10, 0.0, 0.0);  // 10 cm short of the surface
        home.orientation = (base_inv.orientation * cf_w.orientation).normalized();
        rb.pad_target_rel = home;
        rb.pad_pose = compose(rb.base_pose, home);
    }

    // arrangement feasibility: no base discs overlapping
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            const Vec2 pa = w.robots[a].base_pose.position.head<2>();
            const Vec2 pb = w.robots[b].base_pose.position.head<2>();
            if ((pa - pb).norm() < 2.0 * params.base.collision_radius + 0.02)
                throw std::invalid_argument("spawn_scene: infeasible arrangement (base overlap)");
        }

    for (int r = 0; r < n; ++r) w.contacts[r].robot_id = r;
    return w;
}

// ---------------------------------------------------------------------------
// stepping

namespace {

inline void tangent_basis(const Vec3& n, Vec3& t1, Vec3& t2) {
    t1 = n.cross(Vec3::UnitZ());
    if (t1.squaredNorm() < 1e-12) t1 = n.cross(Vec3::UnitX());
    t1.normalize();
    t2 = n.cross(t1);
}

inline bool finite(const Vec3& v) { return v.allFinite(); }
inline bool finite(const Pose& p) {
    return p.position.allFinite() && p.orientation.coeffs().allFinite();
}

struct FaceAccum {
    Vec3 normal = Vec3::Zero();
    double fn = 0.0;
    Vec3 ft = Vec3::Zero();
    Vec3 point_weighted = Vec3::Zero();
};

}  // namespace

void World::integrate_base(RobotBody& r, double dt) {
    const double tau = params.base.time_constant;
    Vec2 cmd = r.cmd_v;
    const double vn = cmd.norm();
    if (vn > 0.6) cmd *= 0.6 / vn;

    Vec2 accel = (cmd - r.base_vel_b) / tau;
    const double an = accel.norm();
    if (an > params.base.accel_limit) accel *= params.base.accel_limit / an;
    r.base_vel_b += accel * dt;

    const double cmd_w = std::clamp(r.cmd_omega, -params.base.yaw_rate_limit,
                                    params.base.yaw_rate_limit);
    double omega = r.base_twist.angular.z();
    omega += (cmd_w - omega) / tau * dt;

    double yaw = r.base_pose.yaw();
    yaw += omega * dt;
    const double c = std::cos(yaw), s = std::sin(yaw);
    const Vec2 v_w(c * r.base_vel_b.x() - s * r.base_vel_b.y(),
                   s * r.base_vel_b.x() + c * r.base_vel_b.y());

    r.base_pose.position.x() += v_w.x() * dt;
    r.base_pose.position.y() += v_w.y() * dt;
    r.base_pose.position.z() = r.stance_height;
    r.base_pose.orientation = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
    r.base_twist.linear = Vec3(v_w.x(), v_w.y(), 0.0);
    r.base_twist.angular = Vec3(0.0, 0.0, omega);
}

void World::pad_servo(RobotBody& r, Vec3& force, Vec3& torque) const {
    const Pose target = compose(r.base_pose, r.pad_target_rel);

    // target velocity feedforward from base motion, clamped so setpoint jumps
    // don't kick the damper
    const Vec3 arm = target.position - r.base_pose.position;
    Vec3 v_target = r.base_twist.linear + r.base_twist.angular.cross(arm);
    const double vt = v_target.norm();
    if (vt > 1.5) v_target *= 1.5 / vt;

    force = params.pad.kp * (target.position - r.pad_pose.position) +
            params.servo_kd * (v_target - r.pad_twist.linear);
    const double fn = force.norm();
    if (fn > params.pad.force_limit) force *= params.pad.force_limit / fn;

    const Vec3 rot_err = orientation_error(target.orientation, r.pad_pose.orientation);
    const Vec3 w_target = r.base_twist.angular;
    torque = params.pad.rot_kp * rot_err + params.servo_rot_kd * (w_target - r.pad_twist.angular);
    const double tn = torque.norm();
    if (tn > params.pad.torque_limit) torque *= params.pad.torque_limit / tn;
}

void World::substep(double dt) {
    WorldState& w = state;
    PayloadBody& pl = w.payload;
    const double mu = params.friction;
    const double k = params.contact_stiffness;
    const double c = params.damping_used;
    const int n = int(w.robots.size());

    Vec3 pl_force = Vec3(0, 0, -params.gravity * pl.mass) + w.external_force;
    Vec3 pl_torque = Vec3::Zero();

    std::vector<Vec3> pad_force(n, Vec3::Zero()), pad_torque(n, Vec3::Zero());

    // --- base + servo
    for (int r = 0; r < n; ++r) {
        if (!w.kinematic_payload) integrate_base(w.robots[r], dt);
        Vec3 sf, st;
        pad_servo(w.robots[r], sf, st);
        w.robots[r].servo_force = sf;
        w.robots[r].servo_torque = st;
        pad_force[r] += sf;
        pad_torque[r] += st;
    }

    // --- pad <-> payload contacts (4 corner points per pad)
    const double h = params.pad.half_extent;
    const std::array<Vec3, 4> corners{Vec3(0, -h, -h), Vec3(0, h, -h), Vec3(0, h, h),
                                      Vec3(0, -h, h)};
    const Pose pl_inv = inverse(pl.pose);

    for (int r = 0; r < n; ++r) {
        RobotBody& rb = w.robots[r];
        std::array<FaceAccum, 4> faces;  // (at most 4 distinct faces per pad in practice)
        int n_faces = 0;

        for (int j = 0; j < 4; ++j) {
            FrictionAnchor& anchor = w.pad_anchors[r][j];
            const Vec3 p = rb.pad_pose.transform_point(corners[j]);
            const SurfaceHit hit = payload_surface_penetration(pl, p);
            if (!hit.hit) {
                anchor.active = false;
                continue;
            }
            w.max_penetration = std::max(w.max_penetration, hit.depth);

            const Vec3 v_pad =
                rb.pad_twist.linear + rb.pad_twist.angular.cross(p - rb.pad_pose.position);
            const Vec3 v_pl = pl.twist.linear + pl.twist.angular.cross(p - pl.pose.position);
            const Vec3 v_rel = v_pad - v_pl;

            const double depth_rate = -v_rel.dot(hit.normal);
            double fn = k * hit.depth + c * depth_rate;
            fn = std::max(fn, 0.0);  // non-adhesive

            if (!anchor.active) {
                anchor.active = true;
                anchor.anchor = pl_inv.transform_point(p);
            }
            const Vec3 a_w = pl.pose.transform_point(anchor.anchor);
            Vec3 d_t = p - a_w;
            d_t -= hit.normal * hit.normal.dot(d_t);
            Vec3 v_t = v_rel - hit.normal * hit.normal.dot(v_rel);
            Vec3 ft = -k * d_t - c * v_t;
            const double lim = mu * fn;
            const double ftn = ft.norm();
            if (ftn > lim) {
                ft *= (lim > 0.0 ? lim / ftn : 0.0);
                anchor.anchor = pl_inv.transform_point(p + ft / k);  // slide
            }

            const Vec3 f_total = hit.normal * fn + ft;  // on the pad
            pad_force[r] += f_total;
            pad_torque[r] += (p - rb.pad_pose.position).cross(f_total);
            pl_force -= f_total;
            pl_torque -= (p - pl.pose.position).cross(f_total);

            // accumulate per-face for the tick record
            int fi = -1;
            for (int q = 0; q < n_faces; ++q)
                if (faces[q].normal.dot(hit.normal) > 0.999) fi = q;
            if (fi < 0 && n_faces < 4) {
                fi = n_faces++;
                faces[fi].normal = hit.normal;
            }
            if (fi >= 0) {
                faces[fi].fn += fn;
                faces[fi].ft += ft;
                faces[fi].point_weighted += fn * p;
            }
        }

        // dominant face -> substep contribution to the tick record accumulator
        int best = -1;
        for (int q = 0; q < n_faces; ++q)
            if (best < 0 || faces[q].fn > faces[best].fn) best = q;
        ContactAccum& acc = accum_[r];
        if (best >= 0 && faces[best].fn > 0.0) {
            const FaceAccum& f = faces[best];
            Vec3 t1, t2;
            tangent_basis(f.normal, t1, t2);
            acc.fn += f.fn;
            acc.ft += Vec2(f.ft.dot(t1), f.ft.dot(t2));
            acc.normal += f.normal;
            acc.point += f.point_weighted / std::max(f.fn, 1e-12);
            acc.hits += 1;
        }
    }

    // --- payload <-> ground
    {
        const auto pts = ground_contact_points(pl);
        if (w.ground_anchors.size() != pts.size()) w.ground_anchors.resize(pts.size());
        for (size_t i = 0; i < pts.size(); ++i) {
            FrictionAnchor& anchor = w.ground_anchors[i];
            const Vec3& p = pts[i];
            if (p.z() >= 0.0) {
                anchor.active = false;
                continue;
            }
            const double depth = -p.z();
            w.max_penetration = std::max(w.max_penetration, depth);
            const Vec3 v_pt = pl.twist.linear + pl.twist.angular.cross(p - pl.pose.position);
            double fn = params.ground_stiffness * depth + c * (-v_pt.z());
            fn = std::max(fn, 0.0);

            if (!anchor.active) {
                anchor.active = true;
                anchor.anchor = p;
            }
            Vec3 d_t = p - anchor.anchor;
            d_t.z() = 0.0;
            Vec3 v_t = v_pt;
            v_t.z() = 0.0;
            Vec3 ft = -k * d_t - c * v_t;
            const double lim = mu * fn;
            const double ftn = ft.norm();
            if (ftn > lim) {
                ft *= (lim > 0.0 ? lim / ftn : 0.0);
                anchor.anchor = p + ft / k;
                anchor.anchor.z() = 0.0;
            }
            const Vec3 f_total = Vec3(0, 0, fn) + ft;  // on the payload
            pl_force += f_total;
            pl_torque += (p - pl.pose.position).cross(f_total);
        }
    }

    net_force_accum_ += pl_force;
    net_torque_accum_ += pl_torque;

    if (w.kinematic_payload) return;  // oracle mode: poses are set externally

    // --- integrate pads (semi-implicit Euler; isotropic rotational inertia)
    for (int r = 0; r < n; ++r) {
        RobotBody& rb = w.robots[r];
        rb.pad_twist.linear += pad_force[r] / params.pad.mass * dt;
        rb.pad_twist.angular += pad_torque[r] / params.pad.rot_inertia * dt;
        rb.pad_pose.position += rb.pad_twist.linear * dt;
        rb.pad_pose.orientation =
            (quat_exp(rb.pad_twist.angular * dt) * rb.pad_pose.orientation).normalized();
    }

    // --- integrate payload
    pl.twist.linear += pl_force / pl.mass * dt;
    const Mat3 rot = pl.pose.orientation.toRotationMatrix();
    const Mat3 iw = rot * pl.inertia_b * rot.transpose();
    const Vec3 ang_accel =
        iw.ldlt().solve(pl_torque - pl.twist.angular.cross(iw * pl.twist.angular));
    pl.twist.angular += ang_accel * dt;
    pl.pose.position += pl.twist.linear * dt;
    pl.pose.orientation =
        (quat_exp(pl.twist.angular * dt) * pl.pose.orientation).normalized();
}

void World::step(std::span<const RobotAction> actions) {
    WorldState& w = state;
    const int n = int(w.robots.size());
    if (int(actions.size()) != n)
        throw std::invalid_argument("World::step: action count != robot count");
    if (params.servo_kd <= 0.0) params.resolve(w.payload.mass, n);

    const WorldState snapshot = w;

    for (int r = 0; r < n; ++r) {
        RobotBody& rb = w.robots[r];
        rb.cmd_v = actions[r].base_v;
        rb.cmd_omega = actions[r].base_omega;

        // clamp the servo setpoint into the reach box (vertical is ground-referenced)
        Pose tgt = actions[r].pad_target_rel;
        tgt.position.x() = std::clamp(tgt.position.x(), params.reach.forward(0),
                                      params.reach.forward(1));
        tgt.position.y() = std::clamp(tgt.position.y(), params.reach.lateral(0),
                                      params.reach.lateral(1));
        const double z_world = tgt.position.z() + rb.stance_height;
        tgt.position.z() =
            std::clamp(z_world, params.reach.vertical(0), params.reach.vertical(1)) -
            rb.stance_height;
        tgt.orientation.normalize();
        rb.pad_target_rel = tgt;
    }

    accum_.assign(n, ContactAccum{});
    net_force_accum_.setZero();
    net_torque_accum_.setZero();

    const double dt = params.control_dt / double(params.substeps_used);
    for (int s = 0; s < params.substeps_used; ++s) substep(dt);

    // finalize per-tick contact records (substep averages)
    w.contacts.assign(n, ContactRecord{});
    bool any_contact = false;
    for (int r = 0; r < n; ++r) {
        ContactRecord& rec = w.contacts[r];
        rec.robot_id = r;
        const ContactAccum& acc = accum_[r];
        if (acc.hits > 0) {
            const double inv = 1.0 / double(params.substeps_used);
            rec.normal_force = acc.fn * inv;
            rec.tangent_force = acc.ft * inv;
            rec.normal = acc.normal.normalized();
            rec.point = acc.point / double(acc.hits);
            rec.in_contact = rec.normal_force > 0.0;
        } else {
            rec.point = w.robots[r].pad_pose.position;
            rec.normal = w.robots[r].pad_pose.rotate(-Vec3::UnitX());
        }
        any_contact = any_contact || rec.in_contact;
        check_contact_invariants(rec, params.friction);
    }

    if (w.t + params.control_dt >= 5.0) {
        if (any_contact)
            w.seconds_without_pad_contact = 0.0;
        else
            w.seconds_without_pad_contact += params.control_dt;
    }
    w.any_pad_contact_ever = w.any_pad_contact_ever || any_contact;

    w.net_payload_force = net_force_accum_ / double(params.substeps_used);
    w.net_payload_torque = net_torque_accum_ / double(params.substeps_used);

    // divergence guard
    bool ok = finite(w.payload.pose) && finite(w.payload.twist.linear) &&
              finite(w.payload.twist.angular);
    for (const RobotBody& r : w.robots)
        ok = ok && finite(r.base_pose) && finite(r.pad_pose) && finite(r.pad_twist.linear);
    if (!ok) throw SimulationDiverged(snapshot);

    w.t += params.control_dt;
}

void check_contact_invariants(const ContactRecord& rec, double mu) {
    if (rec.normal_force < -1e-9)
        throw std::logic_error("contact invariant: adhesive normal force");
    if (rec.tangent_force.norm() > mu * rec.normal_force + 1e-6)
        throw std::logic_error("contact invariant: tangent force outside friction cone");
}

// ---------------------------------------------------------------------------
// detectors

bool detect_drop(const WorldState& w, const WorldParams& p, double commanded_height) {
    if (w.t < 5.0) return false;
    if (w.t >= 5.0 + p.lift_grace && commanded_height >= p.drop_height_min_cmd &&
        w.payload.root_height() < p.drop_height)
        return true;
    return w.seconds_without_pad_contact > p.contact_loss_window;
}

static double footprint_distance(const PayloadBody& pl, const Vec2& q) {
    // 2-D distance from q to the payload's support footprint
    if (pl.shape.kind == PayloadShape::Kind::box) {
        const double yaw = pl.pose.yaw();
        const double c = std::cos(-yaw), s = std::sin(-yaw);
        const Vec2 d = q - pl.pose.position.head<2>();
        const Vec2 local(c * d.x() - s * d.y(), s * d.x() + c * d.y());
        const Vec2 h = 0.5 * pl.shape.box_dims.head<2>();
        const Vec2 excess(std::max(0.0, std::abs(local.x()) - h.x()),
                          std::max(0.0, std::abs(local.y()) - h.y()));
        return excess.norm();
    }
    // cylinder: capsule around the projected axis
    const Vec3 axis = pl.pose.rotate(Vec3::UnitZ());
    const Vec2 a2(axis.x(), axis.y());
    const Vec2 c2 = pl.pose.position.head<2>();
    const double half = 0.5 * pl.shape.length * a2.norm();
    Vec2 dir = a2.norm() > 1e-9 ? Vec2(a2.normalized()) : Vec2(1, 0);
    const double t = std::clamp((q - c2).dot(dir), -half, half);
    return std::max(0.0, (q - (c2 + t * dir)).norm() - pl.shape.radius);
}

bool detect_robot_failure(const WorldState& w, const WorldParams& p) {
    const int n = int(w.robots.size());
    for (int a = 0; a < n; ++a) {
        const RobotBody& ra = w.robots[a];
        // tilt
        const Vec3 up = ra.base_pose.rotate(Vec3::UnitZ());
        if (std::acos(std::clamp(up.z(), -1.0, 1.0)) > p.tilt_failure_rad) return true;
        // base-base
        for (int b = a + 1; b < n; ++b) {
            const double d = (ra.base_pose.position.head<2>() -
                              w.robots[b].base_pose.position.head<2>())
                                 .norm();
            if (2.0 * p.base.collision_radius - d > p.base.collision_tol) return true;
        }
        // base-payload
        const double dist = footprint_distance(w.payload, ra.base_pose.position.head<2>());
        if (p.base.collision_radius - dist > p.base.collision_tol) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// force closure

bool force_closure_check(std::span<const ContactPoint> frames, double mu, const Vec3& com,
                         double pad_half_extent, double char_len, int cone_edges) {
    if (mu <= 0.0) throw std::invalid_argument("force_closure_check: mu must be positive");
    if (frames.size() < 2) return false;

    std::vector<Eigen::Matrix<double, 6, 1>> wrenches;
    wrenches.reserve(frames.size() * 4 * cone_edges);
    for (const ContactPoint& f : frames) {
        const Vec3 n = f.inward_normal.normalized();
        Vec3 t1, t2;
        tangent_basis(n, t1, t2);
        for (int cx : {-1, 1})
            for (int cy : {-1, 1}) {
                const Vec3 p = f.point + pad_half_extent * (cx * t1 + cy * t2);
                for (int e = 0; e < cone_edges; ++e) {
                    const double a = 2.0 * M_PI * double(e) / double(cone_edges);
                    const Vec3 d =
                        (n + mu * (std::cos(a) * t1 + std::sin(a) * t2)).normalized();
                    Eigen::Matrix<double, 6, 1> wr;
                    wr.head<3>() = d;
                    wr.tail<3>() = (p - com).cross(d) / char_len;
                    wrenches.push_back(wr);
                }
            }
    }

    const int kk = int(wrenches.size());
    Eigen::MatrixXd wmat(6, kk);
    for (int i = 0; i < kk; ++i) wmat.col(i) = wrenches[i];

    // rank 6 required: a wrench set confined to a subspace can still balance
    // itself without resisting out-of-subspace loads
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(wmat);
    const auto& sv = svd.singularValues();
    if (sv(5) <= 1e-8 * sv(0)) return false;

    // origin strictly interior to conv(W)  <=>  exists lambda with
    // W lambda = 0, sum lambda = 1, min lambda maximal and positive.
    // Substituting gamma_k = lambda_k - d (gamma, d >= 0):
    Eigen::MatrixXd a(7, kk + 1);
    a.block(0, 0, 6, kk) = wmat;
    a.block(0, kk, 6, 1) = wmat.rowwise().sum();
    a.block(6, 0, 1, kk).setOnes();
    a(6, kk) = double(kk);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(7);
    b(6) = 1.0;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(kk + 1);
    c(kk) = 1.0;

    Eigen::VectorXd x;
    double obj = 0.0;
    if (!detail::simplex_solve(a, b, c, x, obj)) return false;
    return obj > 1e-9;
}

// ---------------------------------------------------------------------------
// summaries

std::vector<double> contact_wrench_summary(
    std::span<const std::vector<ContactRecord>> ticks, int n_robots) {
    std::vector<double> mean(n_robots, 0.0);
    if (ticks.empty()) return mean;
    for (const auto& tick : ticks)
        for (const ContactRecord& rec : tick)
            if (rec.robot_id >= 0 && rec.robot_id < n_robots)
                mean[rec.robot_id] += rec.normal_force;
    for (double& m : mean) m /= double(ticks.size());
    return mean;
}

WrenchResidual payload_wrench_residual(const WorldState& w, const WorldParams&) {
    return {w.net_payload_force, w.net_payload_torque};
}

}  // namespace plm
