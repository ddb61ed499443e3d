#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "plm/curriculum.hpp"

using namespace plm;
using doctest::Approx;

TEST_SUITE("curriculum") {

TEST_CASE("phase table") {
    const PhaseConfig p1 = make_phase_config(1);
    CHECK(p1.phase == Phase::pinch);
    CHECK(p1.episode_length == 7.0);
    CHECK(p1.pool == CommandPool::zero);
    CHECK(p1.mass_min == 100.0);
    CHECK(p1.mass_max == 100.0);
    CHECK(p1.leg_motion_penalty_active);

    const PhaseConfig p2 = make_phase_config(2);
    CHECK(p2.phase == Phase::pinch_lift);
    CHECK(p2.episode_length == 14.0);
    CHECK(p2.pool == CommandPool::lift_only);
    CHECK(p2.mass_min == 0.1);
    CHECK(p2.mass_max == 2.0);
    CHECK(p2.leg_motion_penalty_active);

    const PhaseConfig p3 = make_phase_config(3);
    CHECK(p3.phase == Phase::full_transport);
    CHECK(p3.pool == CommandPool::full);
    CHECK(p3.episode_length == 14.0);
    CHECK(!p3.leg_motion_penalty_active);

    CHECK_THROWS_AS(make_phase_config(0), std::invalid_argument);
    CHECK_THROWS_AS(make_phase_config(4), std::invalid_argument);
}

TEST_CASE("contact frame pose updates always flow in the privileged mode") {
    const ObservabilityMode always{ObservabilityMode::Mode::cf_plus, 0.0};
    for (long tick = 0; tick < 700; ++tick)
        CHECK(cf_pose_update_due(always, tick * 0.02, tick));
}

TEST_CASE("initialization-only mode masks updates after two seconds") {
    const ObservabilityMode frozen{ObservabilityMode::Mode::cf_init, 0.0};
    CHECK(cf_pose_update_due(frozen, 1.0, 50));
    CHECK(cf_pose_update_due(frozen, 1.98, 99));
    CHECK(!cf_pose_update_due(frozen, 2.0, 100));
    CHECK(!cf_pose_update_due(frozen, 3.0, 150));
    CHECK(!cf_pose_update_due(frozen, 13.98, 699));
}

TEST_CASE("annealed update rates land on the tick grid") {
    auto updates_in_second = [](double hz, double t0) {
        const ObservabilityMode m{ObservabilityMode::Mode::cf_init, hz};
        int n = 0;
        for (long k = 0; k < 50; ++k) {
            const long tick = std::lround(t0 / 0.02) + k;
            if (cf_pose_update_due(m, tick * 0.02, tick)) ++n;
        }
        return n;
    };
    CHECK(updates_in_second(50.0, 4.0) == 50);
    CHECK(updates_in_second(25.0, 4.0) == 25);
    CHECK(updates_in_second(5.0, 4.0) == 5);
    // 0.25 Hz: one update per 4 s window
    const ObservabilityMode slow{ObservabilityMode::Mode::cf_init, 0.25};
    int n = 0;
    for (long tick = 100; tick < 300; ++tick)
        if (cf_pose_update_due(slow, tick * 0.02, tick)) ++n;
    CHECK(n == 1);
}

TEST_CASE("sampled contact frames are force-closed and spaced") {
    Rng rng(99);
    CHECK_THROWS_AS(sample_contact_frames(PayloadShape::box({1.0, 1.5, 0.7}), 1, rng, 0.8),
                    std::invalid_argument);

    for (int trial = 0; trial < 25; ++trial) {
        const auto shape = trial % 2 ? PayloadShape::box({1.0, 1.5, 0.7})
                                     : PayloadShape::cylinder(0.25, 0.9);
        const int n = 2 + int(rng.uniform_int(3));
        const double mu = rng.uniform(0.4, 1.0);
        const auto frames = sample_contact_frames(shape, n, rng, mu);
        REQUIRE(frames.size() == size_t(n));

        std::vector<ContactPoint> pts;
        for (const auto& f : frames)
            pts.push_back({f.pose_in_payload.position,
                           f.pose_in_payload.rotate(Vec3::UnitX())});
        const double top = shape.kind == PayloadShape::Kind::box ? shape.box_dims.z()
                                                                 : shape.length;
        CHECK(force_closure_check(pts, mu, Vec3(0, 0, 0.5 * top)));
        for (size_t i = 0; i < pts.size(); ++i)
            for (size_t j = i + 1; j < pts.size(); ++j)
                CHECK((pts[i].point - pts[j].point).norm() >= 0.15);
    }
}

TEST_CASE("two sampled frames on a box mostly oppose each other") {
    Rng rng(7);
    int opposing = 0;
    const int trials = 50;
    for (int k = 0; k < trials; ++k) {
        const auto frames =
            sample_contact_frames(PayloadShape::box({1.0, 1.5, 0.7}), 2, rng, 0.8);
        const Vec3 a = frames[0].pose_in_payload.rotate(Vec3::UnitX());
        const Vec3 b = frames[1].pose_in_payload.rotate(Vec3::UnitX());
        if (a.dot(b) < -0.7) ++opposing;
    }
    CHECK(opposing > trials / 2);  // a pinch needs an opposing pair
}

TEST_CASE("domain draws stay inside their ranges") {
    const RandomizationConfig cfg;
    Rng rng(13);
    for (int k = 0; k < 200; ++k) {
        const DomainDraw d = randomize_domain(cfg, 3, 14.0, rng);
        CHECK(d.friction >= 0.5);
        CHECK(d.friction <= 1.0);
        CHECK(d.base_tau >= 0.12);
        CHECK(d.base_tau <= 0.18);
        CHECK(d.base_accel >= 1.6);
        CHECK(d.base_accel <= 2.4);
        REQUIRE(d.base_offsets.size() == 3);
        for (const Vec3& off : d.base_offsets) {
            CHECK(std::abs(off.x()) <= 2.0 * cfg.init_pos_sigma + 1e-12);
            CHECK(std::abs(off.y()) <= 2.0 * cfg.init_pos_sigma + 1e-12);
            CHECK(std::abs(off.z()) <= 2.0 * cfg.init_yaw_sigma + 1e-12);
        }
    }
}

TEST_CASE("domain draws are reproducible and honor degenerate ranges") {
    RandomizationConfig cfg;
    cfg.friction_range = Vec2(0.7, 0.7);
    cfg.base_tau_range = Vec2(0.15, 0.15);
    cfg.base_accel_range = Vec2(2.0, 2.0);

    Rng a(21), b(21);
    const DomainDraw da = randomize_domain(cfg, 2, 14.0, a);
    const DomainDraw db = randomize_domain(cfg, 2, 14.0, b);
    CHECK(da.friction == 0.7);
    CHECK(da.base_tau == 0.15);
    CHECK(da.base_accel == 2.0);
    CHECK(da.friction == db.friction);
    REQUIRE(da.base_offsets.size() == db.base_offsets.size());
    for (size_t i = 0; i < da.base_offsets.size(); ++i)
        CHECK(da.base_offsets[i] == db.base_offsets[i]);
}

TEST_CASE("disturbance pulses land in the post-lift window") {
    RandomizationConfig cfg;
    cfg.ext_force_rate = 0.5;
    Rng rng(31);
    const DomainDraw d = randomize_domain(cfg, 2, 14.0, rng);
    CHECK(d.pulses.size() == 4);  // floor(0.5 * 9)
    for (const ForcePulse& p : d.pulses) {
        CHECK(p.t_start >= 5.0);
        CHECK(p.t_start <= 14.0);
        CHECK(p.duration == cfg.ext_force_duration);
        CHECK(p.force.head<2>().norm() <= cfg.ext_force_max + 1e-12);
        CHECK(p.force.z() == 0.0);
    }
    // default rate over a 14 s episode stays pulse-free
    Rng rng2(32);
    CHECK(randomize_domain(RandomizationConfig{}, 2, 14.0, rng2).pulses.empty());
}

TEST_CASE("episode generation is deterministic in the seed") {
    EpisodeGenConfig cfg;
    cfg.sampled_frames = true;
    const PhaseConfig phase = make_phase_config(3);
    const ObservabilityMode mode{ObservabilityMode::Mode::cf_init, 5.0};

    const EpisodeSetup a = generate_episode(cfg, phase, mode, 777);
    const EpisodeSetup b = generate_episode(cfg, phase, mode, 777);
    CHECK(a.command.v == b.command.v);
    CHECK(a.command.omega == b.command.omega);
    CHECK(a.command.height == b.command.height);
    CHECK(a.scene.payload_mass == b.scene.payload_mass);
    CHECK(a.draw.friction == b.draw.friction);
    REQUIRE(a.scene.frames.size() == b.scene.frames.size());
    for (size_t i = 0; i < a.scene.frames.size(); ++i)
        CHECK(a.scene.frames[i].pose_in_payload.position ==
              b.scene.frames[i].pose_in_payload.position);

    const EpisodeSetup c = generate_episode(cfg, phase, mode, 778);
    CHECK((a.command.v != c.command.v || a.scene.payload_mass != c.scene.payload_mass));
}

TEST_CASE("episode setup mirrors its phase") {
    EpisodeGenConfig cfg;

    const EpisodeSetup p1 = generate_episode(cfg, make_phase_config(1),
                                             ObservabilityMode{}, 5);
    CHECK(p1.episode_length == 7.0);
    CHECK(p1.phase == Phase::pinch);
    CHECK(p1.command.v.norm() == 0.0);
    CHECK(p1.command.omega == 0.0);
    CHECK(p1.command.height == 0.0);
    CHECK(p1.scene.payload_mass == 100.0);

    const EpisodeSetup p2 = generate_episode(cfg, make_phase_config(2),
                                             ObservabilityMode{}, 5);
    CHECK(p2.episode_length == 14.0);
    CHECK(p2.command.v.norm() == 0.0);
    CHECK(p2.command.height >= cfg.ranges.height(0));
    CHECK(p2.command.height <= cfg.ranges.height(1));
    CHECK(p2.scene.payload_mass >= 0.1);
    CHECK(p2.scene.payload_mass <= 2.0);

    const EpisodeSetup p3 = generate_episode(cfg, make_phase_config(3),
                                             ObservabilityMode{}, 5);
    CHECK(std::abs(p3.command.v.x()) <= cfg.ranges.vx(1) + 1e-12);
    CHECK(std::abs(p3.command.omega) <= cfg.ranges.omega(1) + 1e-12);
    CHECK(p3.params.friction == p3.draw.friction);
    CHECK(p3.scene.friction == p3.draw.friction);
}

TEST_CASE("nominal mode zeroes every randomization") {
    EpisodeGenConfig cfg;
    cfg.randomize = false;
    const EpisodeSetup ep = generate_episode(cfg, make_phase_config(3),
                                             ObservabilityMode{}, 17);
    CHECK(ep.draw.friction == 0.8);
    CHECK(ep.draw.base_tau == 0.15);
    CHECK(ep.draw.obs_noise.pos_sigma == 0.0);
    CHECK(ep.draw.pulses.empty());
    for (const Vec3& off : ep.draw.base_offsets) CHECK(off.norm() == 0.0);
}

TEST_CASE("phase-two masses cover their range uniformly") {
    EpisodeGenConfig cfg;
    cfg.randomize = false;
    const PhaseConfig phase = make_phase_config(2);
    const int n = 5000;
    std::vector<double> masses;
    masses.reserve(n);
    for (int e = 0; e < n; ++e) {
        const EpisodeSetup ep = generate_episode(cfg, phase, ObservabilityMode{},
                                                 derive_seed(9000, uint64_t(e)));
        CHECK(ep.scene.payload_mass >= 0.1);
        CHECK(ep.scene.payload_mass <= 2.0);
        masses.push_back(ep.scene.payload_mass);
    }
    std::sort(masses.begin(), masses.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        const double cdf = (masses[size_t(i)] - 0.1) / 1.9;
        ks = std::max(ks, std::abs(cdf - double(i + 1) / n));
        ks = std::max(ks, std::abs(cdf - double(i) / n));
    }
    CHECK(ks < 0.03);
}

}  // TEST_SUITE
