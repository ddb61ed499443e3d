#include <doctest.h>

#include <cmath>

#include "plm/commands.hpp"
#include "plm/rng.hpp"

using namespace plm;
using doctest::Approx;

TEST_SUITE("commands") {

TEST_CASE("decompose with zero offset is the identity") {
    PayloadCommand c;
    c.v = Vec2(0.3, -0.2);
    c.omega = 0.25;
    c.height = 0.17;
    const ContactFrameCommand out = decompose_command(c, ContactOffset{});
    CHECK(out.v.x() == Approx(0.3));
    CHECK(out.v.y() == Approx(-0.2));
    CHECK(out.omega == Approx(0.25));
    CHECK(out.height == Approx(0.17));
}

TEST_CASE("decompose applies the planar cross product") {
    PayloadCommand c;
    c.omega = 0.4;
    const ContactFrameCommand out = decompose_command(c, ContactOffset{Vec3(0.5, 0, 0)});
    // (0,0,0.4) x (0.5,0,0) = (0, 0.2, 0)
    CHECK(out.v.x() == Approx(0.0));
    CHECK(out.v.y() == Approx(0.2));
    CHECK(out.omega == Approx(0.4));
}

TEST_CASE("decompose adds offset height") {
    PayloadCommand c;
    c.height = 0.1;
    const ContactFrameCommand out = decompose_command(c, ContactOffset{Vec3(0, 0, 0.2)});
    CHECK(out.height == Approx(0.3));
}

TEST_CASE("decompose is linear in the command") {
    Rng rng(31);
    const ContactOffset off{Vec3(0.3, -0.6, 0.1)};
    for (int trial = 0; trial < 30; ++trial) {
        PayloadCommand a, b;
        a.v = Vec2(rng.normal(), rng.normal());
        a.omega = rng.normal();
        b.v = Vec2(rng.normal(), rng.normal());
        b.omega = rng.normal();
        const double s = rng.uniform(-2.0, 2.0);

        PayloadCommand mix;
        mix.v = a.v + s * b.v;
        mix.omega = a.omega + s * b.omega;

        const ContactFrameCommand ca = decompose_command(a, off);
        const ContactFrameCommand cb = decompose_command(b, off);
        const ContactFrameCommand cm = decompose_command(mix, off);
        CHECK((cm.v - (ca.v + s * cb.v)).norm() < 1e-12);
        CHECK(cm.omega == Approx(ca.omega + s * cb.omega));
    }
}

TEST_CASE("rotate_command_to_frame rotates only the planar velocity") {
    ContactFrameCommand c;
    c.v = Vec2(1.0, 0.0);
    c.omega = 0.3;
    c.height = 0.2;
    const ContactFrameCommand r = rotate_command_to_frame(c, M_PI / 2);
    CHECK(r.v.x() == Approx(0.0).epsilon(1e-12).scale(1));
    CHECK(r.v.y() == Approx(-1.0));  // frame yawed +90 deg sees the vector at -90
    CHECK(r.omega == Approx(0.3));
    CHECK(r.height == Approx(0.2));
}

TEST_CASE("sample_eval_command respects degenerate ranges") {
    CommandRanges ranges;
    ranges.vx = Vec2(0, 0);
    ranges.vy = Vec2(0, 0);
    ranges.omega = Vec2(0, 0);
    ranges.height = Vec2(0.1, 0.1);
    Rng rng(32);
    const PayloadCommand c = sample_eval_command(rng, ranges);
    CHECK(c.v.norm() == 0.0);
    CHECK(c.omega == 0.0);
    CHECK(c.height == Approx(0.1));
}

TEST_CASE("sample_eval_command is deterministic per seed") {
    CommandRanges ranges;
    Rng a(77), b(77);
    for (int i = 0; i < 10; ++i) {
        const PayloadCommand ca = sample_eval_command(a, ranges);
        const PayloadCommand cb = sample_eval_command(b, ranges);
        CHECK(ca.v.x() == cb.v.x());
        CHECK(ca.v.y() == cb.v.y());
        CHECK(ca.omega == cb.omega);
        CHECK(ca.height == cb.height);
    }
}

TEST_CASE("sample_eval_command statistics over 10000 draws") {
    CommandRanges ranges;
    Rng rng(33);
    double vx_min = 1e9, vx_max = -1e9, vx_sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const PayloadCommand c = sample_eval_command(rng, ranges);
        CHECK(c.v.x() >= ranges.vx(0));
        CHECK(c.v.x() <= ranges.vx(1));
        CHECK(c.v.y() >= ranges.vy(0));
        CHECK(c.v.y() <= ranges.vy(1));
        CHECK(c.omega >= ranges.omega(0));
        CHECK(c.omega <= ranges.omega(1));
        CHECK(c.height >= ranges.height(0));
        CHECK(c.height <= ranges.height(1));
        vx_min = std::min(vx_min, c.v.x());
        vx_max = std::max(vx_max, c.v.x());
        vx_sum += c.v.x();
    }
    CHECK(vx_min < -0.35);
    CHECK(vx_max > 0.35);
    CHECK(std::abs(vx_sum / 10000.0) < 0.02);
}

TEST_CASE("sync_signal clamps at five seconds") {
    CHECK(sync_signal(0.0) == 0.0);
    CHECK(sync_signal(3.2) == Approx(3.2));
    CHECK(sync_signal(7.0) == 5.0);
    CHECK_THROWS_AS(sync_signal(-0.1), std::invalid_argument);
}

TEST_CASE("target frame ignores a zero command") {
    TargetFrame tf;
    tf.position = Vec2(1, 2);
    tf.yaw = 0.3;
    tf.height = 0.2;
    PayloadCommand zero;
    zero.height = 0.2;
    target_frame_integrate(tf, zero, 0.02);
    CHECK(tf.position.x() == Approx(1.0));
    CHECK(tf.position.y() == Approx(2.0));
    CHECK(tf.yaw == Approx(0.3));
    CHECK(tf.height == Approx(0.2));
}

TEST_CASE("target frame advances straight-line commands") {
    TargetFrame tf;
    PayloadCommand c;
    c.v = Vec2(0.4, 0);
    for (int i = 0; i < 50; ++i) target_frame_integrate(tf, c, 0.02);
    CHECK(tf.position.x() == Approx(0.4).epsilon(1e-9));
    CHECK(tf.position.y() == Approx(0.0).scale(1).epsilon(1e-9));
}

TEST_CASE("target frame closes a commanded circle") {
    TargetFrame tf;
    PayloadCommand c;
    c.v = Vec2(0.4, 0);
    c.omega = M_PI / 8.0;  // 16 s period = exactly 800 steps of 0.02
    for (int i = 0; i < 800; ++i) target_frame_integrate(tf, c, 0.02);
    CHECK(tf.position.norm() < 1e-6);
    CHECK(std::abs(std::remainder(tf.yaw, 2.0 * M_PI)) < 1e-9);
}

TEST_CASE("target frame slews height at the rate limit") {
    TargetFrame tf;
    PayloadCommand c;
    c.height = 0.3;
    target_frame_integrate(tf, c, 0.02, 0.25);
    CHECK(tf.height == Approx(0.005));
    for (int i = 0; i < 200; ++i) target_frame_integrate(tf, c, 0.02, 0.25);
    CHECK(tf.height == Approx(0.3));
}

TEST_CASE("analytic rigid-point velocity matches finite differences") {
    Rng rng(34);
    for (int trial = 0; trial < 100; ++trial) {
        PayloadCommand c;
        c.v = Vec2(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4));
        c.omega = rng.uniform(-0.4, 0.4);
        TargetFrame tf;
        tf.position = Vec2(rng.normal(), rng.normal());
        tf.yaw = rng.uniform(-M_PI, M_PI);
        tf.height = rng.uniform(0.1, 0.3);
        c.height = tf.height;  // so the height channel holds still
        const Vec3 off(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-0.3, 0.3));

        const Vec3 v = rigid_point_velocity(tf, c, off);

        const double dt = 1e-4;
        const Pose before = tf.pose();
        TargetFrame tf2 = tf;
        target_frame_integrate(tf2, c, dt);
        const Pose after = tf2.pose();
        const Vec3 fd = (after.transform_point(off) - before.transform_point(off)) / dt;
        CHECK((v - fd).norm() < 1e-3);
    }
}

}  // TEST_SUITE
