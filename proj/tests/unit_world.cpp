#include <doctest.h>

#include <cstring>
#include <numeric>

#include "plm/world.hpp"
#include "plm/rng.hpp"
#include "support.hpp"

using namespace plm;
using test::SqueezeRig;

namespace {

Pose frame_world(const WorldState& s, const Pose& in_payload) {
    return compose(payload_root_pose(s.payload), in_payload);
}

bool bits_equal(const Pose& a, const Pose& b) {
    const auto sa = a.serialize(), sb = b.serialize();
    return std::memcmp(sa.data(), sb.data(), sizeof(sa)) == 0;
}

}  // namespace

TEST_SUITE("world") {

TEST_CASE("two-pad arrangement lands on opposite long faces") {
    const auto shape = PayloadShape::box({0.5, 0.4, 0.7});
    const auto frames = even_arrangement(shape, 2, 0.35);
    REQUIRE(frames.size() == 2);
    const Vec3 n0 = frames[0].pose_in_payload.rotate(Vec3::UnitX());
    const Vec3 n1 = frames[1].pose_in_payload.rotate(Vec3::UnitX());
    CHECK(n0.dot(n1) == doctest::Approx(-1.0).epsilon(1e-9));  // antiparallel
    CHECK(std::abs(n0.x()) < 1e-9);  // on the +-y faces (the wider pair)
    CHECK(std::abs(n0.z()) < 1e-9);
    CHECK(frames[0].pose_in_payload.position.y() ==
          doctest::Approx(-frames[1].pose_in_payload.position.y()));
    CHECK(std::abs(frames[0].pose_in_payload.position.y()) == doctest::Approx(0.2));
    CHECK(frames[0].pose_in_payload.position.z() == doctest::Approx(0.35));
}

TEST_CASE("three-robot box arrangement is the two-against-one layout") {
    const auto frames = even_arrangement(PayloadShape::box({1.0, 1.5, 0.7}), 3, 0.35);
    REQUIRE(frames.size() == 3);
    std::vector<Vec3> n;
    for (const auto& f : frames) n.push_back(f.pose_in_payload.rotate(Vec3::UnitX()));
    // two share a face normal, the third opposes them
    int paired = 0, opposed = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            if (n[i].dot(n[j]) > 0.99) ++paired;
            if (n[i].dot(n[j]) < -0.99) ++opposed;
        }
    CHECK(paired == 1);
    CHECK(opposed == 2);
}

TEST_CASE("four-robot box arrangement covers all four side faces") {
    const auto frames = even_arrangement(PayloadShape::box({1.0, 1.5, 0.7}), 4, 0.35);
    REQUIRE(frames.size() == 4);
    Vec3 sum = Vec3::Zero();
    for (const auto& f : frames) sum += f.pose_in_payload.rotate(Vec3::UnitX());
    CHECK(sum.norm() < 1e-9);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            const Vec3 a = frames[size_t(i)].pose_in_payload.rotate(Vec3::UnitX());
            const Vec3 b = frames[size_t(j)].pose_in_payload.rotate(Vec3::UnitX());
            CHECK(a.dot(b) < 1.0 - 1e-9);  // no two on the same face
        }
}

TEST_CASE("cylinder arrangement spaces three pads at 120 degrees") {
    const auto shape = PayloadShape::cylinder(0.25, 0.9);
    const auto frames = even_arrangement(shape, 3, 0.35);
    REQUIRE(frames.size() == 3);
    for (int i = 0; i < 3; ++i) {
        const Pose& f = frames[size_t(i)].pose_in_payload;
        const Vec3 n = f.rotate(Vec3::UnitX());
        CHECK(std::abs(n.z()) < 1e-9);
        CHECK(Vec2(f.position.x(), f.position.y()).norm() == doctest::Approx(0.25));
        // inward normal points at the axis
        const Vec3 to_axis = Vec3(-f.position.x(), -f.position.y(), 0).normalized();
        CHECK(n.dot(to_axis) == doctest::Approx(1.0).epsilon(1e-9));
        for (int j = i + 1; j < 3; ++j) {
            const Vec3 m = frames[size_t(j)].pose_in_payload.rotate(Vec3::UnitX());
            CHECK(n.dot(m) == doctest::Approx(-0.5).epsilon(1e-6));
        }
    }
}

TEST_CASE("perimeter and surface frames are consistent") {
    const auto small = PayloadShape::box({0.5, 0.4, 0.7});
    CHECK(lateral_perimeter(small) == doctest::Approx(1.8));
    CHECK(lateral_perimeter(PayloadShape::box({1.0, 1.5, 0.7})) == doctest::Approx(5.0));
    CHECK(lateral_perimeter(PayloadShape::cylinder(0.25, 0.9)) ==
          doctest::Approx(2 * M_PI * 0.25));

    Rng rng(71);
    for (int k = 0; k < 50; ++k) {
        const auto& shape = k % 2 ? small : PayloadShape::cylinder(0.25, 0.9);
        const Pose f = surface_frame_at(shape, rng.uniform(0, lateral_perimeter(shape)),
                                        rng.uniform(0.1, 0.6));
        const Vec3 n = f.rotate(Vec3::UnitX());
        CHECK(std::abs(n.z()) < 1e-9);
        // +x looks into the body: marching inward must reduce lateral extent
        const Vec3 inside = f.position + 0.01 * n;
        CHECK(Vec2(inside.x(), inside.y()).norm() <
              Vec2(f.position.x(), f.position.y()).norm() + 1e-12);
    }
}

TEST_CASE("spawn succeeds for team sizes two through six") {
    WorldParams params;
    for (int n = 2; n <= 6; ++n) {
        SceneSpec spec;  // default 1.0 x 1.5 x 0.7 box
        spec.frames = even_arrangement(spec.shape, n, 0.35);
        params.resolve(spec.payload_mass, n);
        const WorldState s = spawn_scene(spec, params);
        REQUIRE(s.robots.size() == size_t(n));
        for (int i = 0; i < n; ++i) {
            const Pose cf = frame_world(s, spec.frames[size_t(i)].pose_in_payload);
            const auto& r = s.robots[size_t(i)];
            const Vec2 gap(cf.position.x() - r.base_pose.position.x(),
                           cf.position.y() - r.base_pose.position.y());
            CHECK(gap.norm() == doctest::Approx(spec.base_standoff).epsilon(1e-6));
            // base faces its contact frame
            const Vec3 fwd = r.base_pose.rotate(Vec3::UnitX());
            CHECK(Vec2(fwd.x(), fwd.y()).normalized().dot(gap.normalized()) ==
                  doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("infeasible scenes are rejected") {
    WorldParams params;
    SceneSpec spec;
    spec.frames = even_arrangement(spec.shape, 2, 2.0);  // far above vertical reach
    params.resolve(spec.payload_mass, 2);
    CHECK_THROWS_AS(spawn_scene(spec, params), std::invalid_argument);

    SceneSpec overlap;
    overlap.frames = even_arrangement(overlap.shape, 2, 0.35);
    overlap.frames[1] = overlap.frames[0];  // coincident bases
    CHECK_THROWS_AS(spawn_scene(overlap, params), std::invalid_argument);
}

TEST_CASE("payload rests quietly on the ground") {
    SqueezeRig rig(0.8);
    CHECK(std::abs(rig.world.state.payload.root_height()) < 1e-6);
    rig.hold(1.0);  // pads stay flush at zero depth
    CHECK(std::abs(rig.world.state.payload.root_height()) < 0.002);
    CHECK(rig.world.state.max_penetration < 0.002);
    const Vec3 up = rig.world.state.payload.pose.rotate(Vec3::UnitZ());
    CHECK(up.z() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("base velocity tracking lags the command") {
    SqueezeRig rig(0.8);
    const Vec3 start = rig.world.state.robots[0].base_pose.position;
    std::vector<RobotAction> actions(2);
    for (size_t i = 0; i < 2; ++i)
        actions[i].pad_target_rel = rig.world.state.robots[i].pad_target_rel;
    actions[0].base_v = Vec2(0.0, 0.4);  // lateral: path is clear of box and teammate
    for (int k = 0; k < 50; ++k) rig.world.step(actions);
    const double dist =
        (rig.world.state.robots[0].base_pose.position - start).head<2>().norm();
    // first-order lag with accel clamp: below the commanded 0.40 m, above 0.30 m
    CHECK(dist > 0.30);
    CHECK(dist < 0.38);
    CHECK(rig.world.state.robots[0].base_vel_b.norm() == doctest::Approx(0.4).epsilon(0.02));
}

TEST_CASE("drop detector") {
    SqueezeRig rig(0.8);
    WorldState w = rig.world.state;
    const WorldParams& p = rig.params;

    auto with = [&](double t, double root_z, double no_contact) {
        WorldState s = w;
        s.t = t;
        s.payload.pose.position.z() += root_z - s.payload.root_height();
        s.seconds_without_pad_contact = no_contact;
        return s;
    };

    CHECK(!detect_drop(with(3.0, 0.01, 2.0), p, 0.2));        // pre-move: never a drop
    CHECK(!detect_drop(with(7.5, 0.20, 0.0), p, 0.2));        // carried at height
    CHECK(detect_drop(with(7.5, 0.03, 0.0), p, 0.2));         // commanded up, still down
    CHECK(!detect_drop(with(6.0, 0.03, 0.0), p, 0.2));        // inside the lift grace
    CHECK(!detect_drop(with(7.5, 0.03, 0.0), p, 0.05));       // no lift asked for
    CHECK(detect_drop(with(5.2, 0.20, 0.6), p, 0.2));         // contact lost too long
    CHECK(!detect_drop(with(5.2, 0.20, 0.4), p, 0.2));        // brief loss tolerated
}

TEST_CASE("robot failure detector") {
    SqueezeRig rig(0.8);
    const WorldState& nominal = rig.world.state;
    const WorldParams& p = rig.params;
    CHECK(!detect_robot_failure(nominal, p));

    WorldState crowded = nominal;
    crowded.robots[0].base_pose.position = Vec3(2.0, 0.0, 0.4);
    crowded.robots[1].base_pose.position = Vec3(2.5, 0.0, 0.4);  // 0.5 < 2r - tol
    CHECK(detect_robot_failure(crowded, p));

    WorldState tilted = nominal;
    tilted.robots[0].base_pose.orientation =
        Pose::from_axis_angle(Vec3::UnitX(), 0.785).orientation;
    CHECK(detect_robot_failure(tilted, p));

    WorldState rammed = nominal;
    rammed.robots[0].base_pose.position = Vec3(0.3, 0.0, 0.4);  // inside the payload
    CHECK(detect_robot_failure(rammed, p));
}

TEST_CASE("force closure spot checks") {
    const Vec3 com(0, 0, 0.35);
    const std::vector<ContactPoint> antipodal = {
        {Vec3(0, -0.2, 0.35), Vec3(0, 1, 0)},
        {Vec3(0, 0.2, 0.35), Vec3(0, -1, 0)},
    };
    CHECK(force_closure_check(antipodal, 0.8, com));
    CHECK_THROWS_AS(force_closure_check(antipodal, 0.0, com), std::invalid_argument);

    const std::vector<ContactPoint> same_face = {
        {Vec3(-0.15, -0.2, 0.35), Vec3(0, 1, 0)},
        {Vec3(0.15, -0.2, 0.35), Vec3(0, 1, 0)},
    };
    CHECK(!force_closure_check(same_face, 0.8, com));

    std::vector<ContactPoint> tripod;
    for (const auto& f : even_arrangement(PayloadShape::cylinder(0.25, 0.9), 3, 0.35))
        tripod.push_back({f.pose_in_payload.position,
                          f.pose_in_payload.rotate(Vec3::UnitX())});
    CHECK(force_closure_check(tripod, 0.5, com));
}

TEST_CASE("force closure agrees with the sampling oracle") {
    const Vec3 com(0, 0, 0.35);
    Rng rng(2026);
    int interior = 0, exterior = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const auto shape = trial % 2 ? PayloadShape::box({1.0, 1.5, 0.7})
                                     : PayloadShape::cylinder(0.25, 0.9);
        const int n = 2 + int(rng.uniform_int(3));
        const double mu = rng.uniform(0.3, 1.0);
        std::vector<ContactPoint> pts;
        for (int i = 0; i < n; ++i) {
            const Pose f = surface_frame_at(shape, rng.uniform(0, lateral_perimeter(shape)),
                                            rng.uniform(0.15, 0.55));
            pts.push_back({f.position, f.rotate(Vec3::UnitX())});
        }
        const bool lib = force_closure_check(pts, mu, com);
        const bool ref = test::brute_force_closure(pts, mu, com);
        CHECK(lib == ref);
        (lib ? interior : exterior) += 1;
    }
    CHECK(interior > 0);  // the sample must exercise both answers
    CHECK(exterior > 0);
}

TEST_CASE("squeeze respects contact invariants and stays stiff") {
    SqueezeRig rig(0.8);
    const int ticks = int(3.0 / rig.params.control_dt);
    for (int k = 0; k < ticks; ++k) {
        for (size_t i = 0; i < rig.depth.size(); ++i) {
            rig.depth[i] += 4e-5 * (33.0 - rig.normal_force(int(i)));
            rig.depth[i] = std::clamp(rig.depth[i], 0.0, 0.06);
        }
        rig.tick();
        for (const auto& rec : rig.world.state.contacts)
            check_contact_invariants(rec, rig.params.friction);
    }
    CHECK(rig.normal_force(0) == doctest::Approx(33.0).epsilon(0.1));
    CHECK(rig.normal_force(1) == doctest::Approx(33.0).epsilon(0.1));
    CHECK(rig.world.state.max_penetration < 0.005);
}

TEST_CASE("held payload hovers with a small quasi-static residual") {
    SqueezeRig rig(0.8);
    rig.squeeze_to(33.0, 3.0);
    rig.lift_by(0.15);
    rig.hold(0.5);
    CHECK(rig.world.state.payload.root_height() > 0.10);

    Vec3 mean_f = Vec3::Zero(), mean_tau = Vec3::Zero();
    const int ticks = int(1.0 / rig.params.control_dt);
    for (int k = 0; k < ticks; ++k) {
        rig.tick();
        const WrenchResidual res = payload_wrench_residual(rig.world.state, rig.params);
        mean_f += res.force;
        mean_tau += res.torque;
    }
    CHECK((mean_f / ticks).norm() < 0.5);
    CHECK((mean_tau / ticks).norm() < 0.2);
}

TEST_CASE("hold versus slip follows the pinch bound") {
    // 2 kg at g=9.81 needs 2*mu*F >= 19.62: F=25 N holds at mu=0.8, F=6 N slips
    SqueezeRig holds(0.8);
    holds.squeeze_to(25.0, 3.0);
    holds.lift_by(0.15);
    holds.hold(1.0);
    CHECK(holds.world.state.payload.root_height() > 0.10);

    SqueezeRig slips(0.8);
    slips.squeeze_to(6.0, 3.0);
    slips.lift_by(0.15);
    slips.hold(1.0);
    CHECK(slips.world.state.payload.root_height() < 0.05);
}

TEST_CASE("stepping is deterministic") {
    auto run = [](int ticks) {
        SqueezeRig rig(0.8);
        rig.squeeze_to(33.0, 2.0);
        rig.lift_by(0.1);
        rig.hold(ticks * rig.params.control_dt);
        return rig;
    };
    const SqueezeRig a = run(25), b = run(25);
    CHECK(bits_equal(a.world.state.payload.pose, b.world.state.payload.pose));
    for (size_t i = 0; i < 2; ++i) {
        CHECK(bits_equal(a.world.state.robots[i].base_pose, b.world.state.robots[i].base_pose));
        CHECK(bits_equal(a.world.state.robots[i].pad_pose, b.world.state.robots[i].pad_pose));
        CHECK(a.world.state.contacts[i].normal_force == b.world.state.contacts[i].normal_force);
    }
    CHECK(a.world.state.t == b.world.state.t);
}

TEST_CASE("contact wrench summary averages per robot") {
    std::vector<std::vector<ContactRecord>> ticks;
    for (int k = 0; k < 10; ++k) {
        std::vector<ContactRecord> tick(2);
        tick[0].robot_id = 0;
        tick[0].normal_force = 10.0;
        tick[1].robot_id = 1;
        tick[1].normal_force = k % 2 ? 12.0 : 8.0;
        ticks.push_back(tick);
    }
    const auto mean = contact_wrench_summary(ticks, 2);
    REQUIRE(mean.size() == 2);
    CHECK(mean[0] == doctest::Approx(10.0));
    CHECK(mean[1] == doctest::Approx(10.0));
}

}  // TEST_SUITE
