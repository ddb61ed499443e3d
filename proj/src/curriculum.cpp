#include "plm/curriculum.hpp"

#include <cmath>
#include <stdexcept>

namespace plm {

PhaseConfig make_phase_config(int phase) {
    switch (phase) {
        case 1:
            return {Phase::pinch, 7.0, CommandPool::zero, 100.0, 100.0, true};
        case 2:
            return {Phase::pinch_lift, 14.0, CommandPool::lift_only, 0.1, 2.0, true};
        case 3:
            return {Phase::full_transport, 14.0, CommandPool::full, 0.1, 2.0, false};
        default:
            throw std::invalid_argument("make_phase_config: phase must be 1, 2, or 3");
    }
}

DomainDraw randomize_domain(const RandomizationConfig& cfg, int n_robots,
                            double episode_length, Rng& rng) {
    DomainDraw d;
    d.friction = rng.uniform(cfg.friction_range(0), cfg.friction_range(1));
    d.base_tau = rng.uniform(cfg.base_tau_range(0), cfg.base_tau_range(1));
    d.base_accel = rng.uniform(cfg.base_accel_range(0), cfg.base_accel_range(1));
    d.base_offsets.reserve(n_robots);
    for (int r = 0; r < n_robots; ++r)
        d.base_offsets.push_back({rng.normal_clamped(0.0, cfg.init_pos_sigma),
                                  rng.normal_clamped(0.0, cfg.init_pos_sigma),
                                  rng.normal_clamped(0.0, cfg.init_yaw_sigma)});
    d.obs_noise = cfg.obs_noise;
    d.action_noise_sigma = cfg.action_noise_sigma;

    // disturbance pulses in the post-lift window, deterministic count
    const double window = std::max(0.0, episode_length - 5.0);
    const int n_pulses = int(std::floor(cfg.ext_force_rate * window));
    for (int i = 0; i < n_pulses; ++i) {
        ForcePulse p;
        p.t_start = 5.0 + rng.uniform(0.0, window);
        p.duration = cfg.ext_force_duration;
        const double ang = rng.uniform(0.0, 2.0 * M_PI);
        const double mag = rng.uniform(0.0, cfg.ext_force_max);
        p.force = Vec3(mag * std::cos(ang), mag * std::sin(ang), 0.0);
        d.pulses.push_back(p);
    }
    return d;
}

bool cf_pose_update_due(const ObservabilityMode& mode, double t, long tick) {
    if (mode.mode == ObservabilityMode::Mode::cf_plus) return true;
    // the open window ends a hair early so accumulated-float ticks that land
    // at nominally t = 2 never count as updates after the mask engages
    if (t < 2.0 - 1e-9) return true;
    if (mode.update_hz <= 0.0) return false;
    const long period = std::max(1L, std::lround(50.0 / mode.update_hz));
    return tick % period == 0;
}

std::vector<ContactFramePlacement> sample_contact_frames(const PayloadShape& shape, int n,
                                                         Rng& rng, double mu,
                                                         int max_attempts) {
    if (n < 2) throw std::invalid_argument("sample_contact_frames: need at least 2 frames");

    const double per = lateral_perimeter(shape);
    const double top = shape.kind == PayloadShape::Kind::box ? shape.box_dims.z() : shape.length;
    const double z_lo = 0.12;
    const double z_hi = std::min(0.55, top - 0.05);
    if (z_hi <= z_lo)
        throw std::invalid_argument("sample_contact_frames: payload too low for pad heights");
    const Vec3 com(0.0, 0.0, 0.5 * top);  // root coordinates, upright spawn

    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        std::vector<ContactFramePlacement> frames;
        frames.reserve(n);
        bool spaced = true;
        for (int r = 0; r < n && spaced; ++r) {
            const double arc = rng.uniform(0.0, per);
            const double z = rng.uniform(z_lo, z_hi);
            const Pose pose = surface_frame_at(shape, arc, z);
            for (const auto& other : frames)
                if ((other.pose_in_payload.position - pose.position).norm() < 0.15)
                    spaced = false;
            frames.push_back({pose});
        }
        if (!spaced) continue;

        std::vector<ContactPoint> pts;
        pts.reserve(n);
        for (const auto& f : frames)
            pts.push_back({f.pose_in_payload.position,
                           f.pose_in_payload.rotate(Vec3::UnitX())});
        if (force_closure_check(pts, mu, com)) return frames;
    }
    throw std::runtime_error("sample_contact_frames: no force-closed set found");
}

EpisodeSetup generate_episode(const EpisodeGenConfig& cfg, const PhaseConfig& phase,
                              const ObservabilityMode& mode, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x45504953ull));  // episode-local stream

    EpisodeSetup ep;
    ep.phase = phase.phase;
    ep.episode_length = phase.episode_length;
    ep.obs_mode = mode;
    ep.seed = seed;

    const double mass = rng.uniform(phase.mass_min, phase.mass_max);

    switch (phase.pool) {
        case CommandPool::zero:
            ep.command = {};
            break;
        case CommandPool::lift_only:
            ep.command = {};
            ep.command.height = rng.uniform(cfg.ranges.height(0), cfg.ranges.height(1));
            break;
        case CommandPool::full:
            ep.command = sample_eval_command(rng, cfg.ranges);
            break;
    }

    if (cfg.randomize)
        ep.draw = randomize_domain(cfg.rand, cfg.n_robots, phase.episode_length, rng);
    else {
        ep.draw = DomainDraw{};
        ep.draw.base_offsets.assign(cfg.n_robots, Vec3::Zero());
    }

    ep.params = WorldParams{};
    ep.params.friction = ep.draw.friction;
    ep.params.base.time_constant = ep.draw.base_tau;
    ep.params.base.accel_limit = ep.draw.base_accel;
    ep.params.resolve(mass, cfg.n_robots);

    ep.scene.shape = cfg.shape;
    ep.scene.payload_mass = mass;
    ep.scene.base_standoff = cfg.base_standoff;
    ep.scene.friction = ep.draw.friction;
    ep.scene.base_offsets = ep.draw.base_offsets;

    // keep drawing until the scene is actually spawnable
    for (int attempt = 0;; ++attempt) {
        ep.scene.frames = cfg.sampled_frames
                              ? sample_contact_frames(cfg.shape, cfg.n_robots, rng,
                                                      ep.draw.friction)
                              : even_arrangement(cfg.shape, cfg.n_robots, cfg.contact_height);
        try {
            (void)spawn_scene(ep.scene, ep.params);
            break;
        } catch (const std::invalid_argument&) {
            if (attempt >= 100)
                throw std::runtime_error("generate_episode: no spawnable scene found");
            if (cfg.randomize) {
                // base spawn noise can push discs into contact; redraw it
                for (auto& off : ep.scene.base_offsets)
                    off = Vec3(rng.normal_clamped(0.0, cfg.rand.init_pos_sigma),
                               rng.normal_clamped(0.0, cfg.rand.init_pos_sigma),
                               rng.normal_clamped(0.0, cfg.rand.init_yaw_sigma));
                ep.draw.base_offsets = ep.scene.base_offsets;
            } else if (!cfg.sampled_frames) {
                throw;  // deterministic scene that cannot spawn: config error
            }
        }
    }
    return ep;
}

}  // namespace plm
