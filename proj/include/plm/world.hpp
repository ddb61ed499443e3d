#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "plm/commands.hpp"
#include "plm/geometry.hpp"

namespace plm {

// ---------------------------------------------------------------------------
// bodies

struct PayloadShape {
    enum class Kind { box, cylinder };
    Kind kind = Kind::box;
    Vec3 box_dims{1.0, 1.5, 0.7};  // full extents x,y,z (box)
    double radius = 0.25;          // cylinder
    double length = 0.9;           // cylinder, along body z

    static PayloadShape box(const Vec3& dims) { return {Kind::box, dims, 0, 0}; }
    static PayloadShape cylinder(double radius, double length) {
        return {Kind::cylinder, Vec3::Zero(), radius, length};
    }
};

struct PayloadBody {
    PayloadShape shape;
    double mass = 2.0;
    Mat3 inertia_b = Mat3::Identity();  // body-frame inertia tensor
    Pose pose;                          // body origin = geometric center
    Twist twist;
    Vec3 root_offset_b = Vec3::Zero();  // command/root reference point, body frame

    // Height of the root reference above ground.
    double root_height() const { return pose.transform_point(root_offset_b).z(); }
};

// Velocity-tracked quadruped base (abstracted) + servo-driven contact pad.
// The "base frame" is the yaw-only body frame at stance height; pad poses and
// targets are expressed in it.
struct RobotBody {
    Pose base_pose;             // z = stance height, orientation yaw-only
    Twist base_twist;
    Vec2 base_vel_b = Vec2::Zero();  // lagged planar velocity, body frame
    double stance_height = 0.4;

    Pose pad_pose;              // world frame
    Twist pad_twist;
    Pose pad_target_rel;        // servo setpoint, base frame

    Vec2 cmd_v = Vec2::Zero();  // commanded planar velocity, body frame
    double cmd_omega = 0.0;

    Vec3 servo_force = Vec3::Zero();   // last applied servo wrench (world)
    Vec3 servo_torque = Vec3::Zero();
};

// One per-robot pad<->payload contact summary for a control tick (corner
// forces aggregated; normal is the payload's outward face normal).
struct ContactRecord {
    int robot_id = -1;
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    double normal_force = 0.0;   // >= 0, non-adhesive
    Vec2 tangent_force = Vec2::Zero();  // components in the (t1, t2) basis of `normal`
    bool in_contact = false;
};

struct FrictionAnchor {
    bool active = false;
    Vec3 anchor = Vec3::Zero();  // pad contacts: payload frame; ground: world frame
};

// ---------------------------------------------------------------------------
// parameters

struct PadServoParams {
    double half_extent = 0.03;  // 6x6 cm square pad
    double mass = 0.8;          // effective pad + reflected arm inertia
    double rot_inertia = 0.01;
    double kp = 2000.0;
    double force_limit = 60.0;
    double rot_kp = 20.0;
    double torque_limit = 10.0;
};

struct BaseParams {
    double time_constant = 0.15;  // first-order velocity lag
    double accel_limit = 2.0;     // m/s^2
    double yaw_rate_limit = 0.6;  // command clamp
    double collision_radius = 0.3;
    double collision_tol = 0.05;
};

struct ReachBox {  // base frame, z measured from ground
    Vec2 forward{0.3, 0.8};
    Vec2 lateral{-0.3, 0.3};
    Vec2 vertical{0.1, 0.6};
};

struct WorldParams {
    double control_dt = 0.02;
    int substeps = 8;
    double gravity = 9.81;

    double contact_stiffness = 5e3;   // N/m per contact point
    double contact_damping = 50.0;    // N*s/m per contact point (pre-clamp)
    double friction = 0.8;

    PadServoParams pad;
    BaseParams base;
    ReachBox reach;

    double drop_height = 0.05;
    double drop_height_min_cmd = 0.1;
    double contact_loss_window = 0.5;
    double lift_grace = 2.0;
    double tilt_failure_rad = 0.5236;  // 30 deg

    // resolved per scene (see resolve()):
    double ground_stiffness = 5e3;
    double damping_used = 50.0;
    double servo_kd = 0.0;
    double servo_rot_kd = 0.0;
    int substeps_used = 8;

    // Derive the stability-dependent values for a scene. Explicit penalty
    // springs at these rates are only stable if substep count rises for light
    // payloads and damping stays inside the semi-implicit stability region;
    // ground stiffness gets a floor so heavy payloads still rest within ~2 mm.
    void resolve(double payload_mass, int n_robots);
};

// ---------------------------------------------------------------------------
// state

struct WorldState {
    PayloadBody payload;
    std::vector<RobotBody> robots;
    std::vector<ContactRecord> contacts;  // per robot, refreshed every control tick
    double t = 0.0;

    // diagnostics / detector support
    double max_penetration = 0.0;          // high-water mark, m
    double seconds_without_pad_contact = 0.0;
    bool any_pad_contact_ever = false;
    bool kinematic_payload = false;        // privileged oracle mode

    Vec3 external_force = Vec3::Zero();    // disturbance at the payload com

    // net contact+gravity wrench on the payload, substep-averaged last tick
    Vec3 net_payload_force = Vec3::Zero();
    Vec3 net_payload_torque = Vec3::Zero();

    // persistent friction state (value-semantic: copying the state copies it)
    std::vector<std::array<FrictionAnchor, 4>> pad_anchors;
    std::vector<FrictionAnchor> ground_anchors;
};

// thrown when integration produces NaN; carries the last valid state
struct SimulationDiverged : std::runtime_error {
    WorldState last_valid;
    explicit SimulationDiverged(WorldState s)
        : std::runtime_error("simulation diverged (NaN state)"), last_valid(std::move(s)) {}
};

// per-robot input to one control tick
struct RobotAction {
    Pose pad_target_rel;  // absolute servo setpoint, base frame
    Vec2 base_v = Vec2::Zero();
    double base_omega = 0.0;
};

// ---------------------------------------------------------------------------
// scene construction

// A contact frame placed on the payload: pose in payload-root coordinates,
// +x = inward surface normal.
struct ContactFramePlacement {
    Pose pose_in_payload;
};

struct SceneSpec {
    PayloadShape shape = PayloadShape::box({1.0, 1.5, 0.7});
    double payload_mass = 2.0;
    std::vector<ContactFramePlacement> frames;
    double base_standoff = 0.55;          // horizontal distance base<->contact point
    std::vector<double> stance_heights;   // per robot (empty -> 0.4)
    std::vector<Vec3> base_offsets;       // spawn noise: dx, dy, dyaw per robot
    double friction = 0.8;
    Pose payload_pose;                    // optional initial pose override (z<=0 -> resting)
};

// Build a world with the payload resting at the origin and one robot per
// contact frame, facing its frame at the standoff distance. Throws
// std::invalid_argument on infeasible arrangements (base overlap, frames
// out of pad reach).
WorldState spawn_scene(const SceneSpec& spec, const WorldParams& params);

// Evenly distributed contact frames for n robots (top view: indexing starts
// nearest the top-right corner and increases clockwise). Boxes use even
// perimeter arc length with a corner-avoiding phase; n=3 uses the asymmetric
// two-against-one layout; cylinders use even angles.
std::vector<ContactFramePlacement> even_arrangement(const PayloadShape& shape, int n,
                                                    double contact_height);

// Contact frame on the lateral surface at a perimeter arc position (payload
// root coordinates, +x inward, z up). Boxes: clockwise arc length from the
// top-right corner; cylinders: arc along the circumference.
Pose surface_frame_at(const PayloadShape& shape, double arc, double height);

// Total lateral perimeter (the arc parameter's period).
double lateral_perimeter(const PayloadShape& shape);

// ---------------------------------------------------------------------------
// stepping

class World {
  public:
    WorldParams params;
    WorldState state;

    // Advance one control tick (substepped penalty-contact physics,
    // semi-implicit Euler). actions.size() must equal robot count.
    void step(std::span<const RobotAction> actions);

  private:
    struct ContactAccum {
        double fn = 0.0;
        Vec2 ft = Vec2::Zero();
        Vec3 normal = Vec3::Zero();
        Vec3 point = Vec3::Zero();
        int hits = 0;
    };

    void substep(double dt);
    void integrate_base(RobotBody& r, double dt);
    void pad_servo(RobotBody& r, Vec3& force, Vec3& torque) const;

    std::vector<ContactAccum> accum_;
    Vec3 net_force_accum_ = Vec3::Zero();
    Vec3 net_torque_accum_ = Vec3::Zero();
};

// Sanity checks on every contact produced by a substep; throws
// std::logic_error on violation (friction cone, adhesion).
void check_contact_invariants(const ContactRecord& rec, double mu);

// ---------------------------------------------------------------------------
// detectors

// Drop: post-lift (t, grace-gated for the height rule), payload root below
// the threshold while a lift is commanded, or all pad contact lost for
// longer than the loss window.
bool detect_drop(const WorldState& w, const WorldParams& p, double commanded_height);

// Robot failure: base-base / base-payload penetration beyond tolerance, or
// base tilt beyond the limit.
bool detect_robot_failure(const WorldState& w, const WorldParams& p);

// ---------------------------------------------------------------------------
// force closure

// (contact point, inward unit normal) pairs, world or payload coordinates
// (consistent with com).
struct ContactPoint {
    Vec3 point;
    Vec3 inward_normal;
};

// True iff the wrench origin is strictly interior to the convex hull of the
// discretized friction-cone wrenches. Each frame is expanded to the pad's
// four corner points (point contacts alone can never close a 6-D wrench
// space for two frames), each corner contributing `cone_edges` cone edge
// wrenches about `com` with torques scaled by `char_len`.
bool force_closure_check(std::span<const ContactPoint> frames, double mu, const Vec3& com,
                         double pad_half_extent = 0.03, double char_len = 0.9,
                         int cone_edges = 8);

// Mean per-robot normal force over a window of per-tick contact snapshots.
std::vector<double> contact_wrench_summary(
    std::span<const std::vector<ContactRecord>> ticks, int n_robots);

// net contact + gravity wrench on the payload (quasi-static residual checks)
struct WrenchResidual {
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();
};
WrenchResidual payload_wrench_residual(const WorldState& w, const WorldParams& p);

// Pose of the payload's root reference frame (command frame) in the world.
Pose payload_root_pose(const PayloadBody& body);

// world-space support/query helpers (exposed for tests)
struct SurfaceHit {
    bool hit = false;
    double depth = 0.0;
    Vec3 normal = Vec3::UnitZ();  // outward from payload surface
};
SurfaceHit payload_surface_penetration(const PayloadBody& body, const Vec3& point_w);
std::vector<Vec3> ground_contact_points(const PayloadBody& body);

}  // namespace plm
