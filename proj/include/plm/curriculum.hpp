#pragma once

#include <cstdint>
#include <vector>

#include "plm/commands.hpp"
#include "plm/rewards.hpp"
#include "plm/rng.hpp"
#include "plm/world.hpp"

namespace plm {

// ---------------------------------------------------------------------------
// phases

enum class CommandPool { zero, lift_only, full };

struct PhaseConfig {
    Phase phase = Phase::pinch;
    double episode_length = 7.0;  // s
    CommandPool pool = CommandPool::zero;
    double mass_min = 100.0;      // kg (min == max -> fixed)
    double mass_max = 100.0;
    bool leg_motion_penalty_active = true;
};

// Fixed three-stage table: (1) pinch only, 7 s, very heavy payload, zero
// commands; (2) adds lifting, 14 s, mass randomized in [0.1, 2]; (3) the full
// command pool with the leg-motion penalty removed.
PhaseConfig make_phase_config(int phase);

// ---------------------------------------------------------------------------
// randomization

struct ObsNoise {
    double pos_sigma = 0.0;    // m, on observed positions
    double rot_sigma = 0.0;    // rad, on observed orientations
    double twist_sigma = 0.0;  // m/s | rad/s
    double force_sigma = 0.0;  // N
};

struct ForcePulse {
    double t_start = 0.0;
    double duration = 0.0;
    Vec3 force = Vec3::Zero();  // world frame, applied at the payload com
};

struct RandomizationConfig {
    Vec2 friction_range{0.5, 1.0};
    Vec2 base_tau_range{0.12, 0.18};     // first-order lag time constant (s)
    Vec2 base_accel_range{1.6, 2.4};     // m/s^2
    double init_pos_sigma = 0.05;        // m, base spawn offset
    double init_yaw_sigma = 0.1;         // rad
    // sensing/action noise defaults are artifact choices, not published values
    ObsNoise obs_noise{0.005, 0.01, 0.01, 0.5};
    double action_noise_sigma = 0.0;
    double ext_force_max = 3.0;          // N, per pulse
    double ext_force_rate = 0.1;         // expected pulses per second (post-lift)
    double ext_force_duration = 0.2;     // s
};

// Concrete per-episode draws (recorded in the episode header).
struct DomainDraw {
    double friction = 0.8;
    double base_tau = 0.15;
    double base_accel = 2.0;
    std::vector<Vec3> base_offsets;      // dx, dy, dyaw per robot
    ObsNoise obs_noise;
    double action_noise_sigma = 0.0;
    std::vector<ForcePulse> pulses;
};

// Draw every randomized quantity for one episode in a fixed order (so a seed
// fully determines the draw). episode_length bounds the pulse schedule.
DomainDraw randomize_domain(const RandomizationConfig& cfg, int n_robots,
                            double episode_length, Rng& rng);

// ---------------------------------------------------------------------------
// observability

struct ObservabilityMode {
    enum class Mode { cf_plus, cf_init };
    Mode mode = Mode::cf_plus;
    double update_hz = 50.0;  // anneal stage: 50, 25, 5, 0.25, or 0
};

// Whether the contact-frame pose observation refreshes at this control tick.
// cf_plus: always. cf_init: always during the first 2 s, afterwards only on
// the update_hz grid (never, once annealed to 0 Hz).
bool cf_pose_update_due(const ObservabilityMode& mode, double t, long tick);

// ---------------------------------------------------------------------------
// contact-frame sampling

// Draw n contact frames on the payload's lateral surface (poses in payload
// root coordinates, +x inward) subject to force-closure feasibility,
// resampling up to max_attempts times. Throws std::invalid_argument for
// n < 2 and std::runtime_error if no feasible set is found.
std::vector<ContactFramePlacement> sample_contact_frames(const PayloadShape& shape, int n,
                                                         Rng& rng, double mu,
                                                         int max_attempts = 100);

// ---------------------------------------------------------------------------
// episode generation

struct EpisodeGenConfig {
    PayloadShape shape = PayloadShape::box({1.0, 1.5, 0.7});
    int n_robots = 2;
    bool sampled_frames = false;   // false -> even arrangement
    double contact_height = 0.35;  // m above ground (even arrangements)
    double base_standoff = 0.55;
    CommandRanges ranges;
    RandomizationConfig rand;
    bool randomize = true;         // false -> zero noise, nominal dynamics
};

// Everything the episode runner needs, derived deterministically from a seed.
struct EpisodeSetup {
    SceneSpec scene;
    WorldParams params;            // resolved for this scene
    PayloadCommand command;        // team command for the move stage
    double episode_length = 14.0;
    Phase phase = Phase::full_transport;
    ObservabilityMode obs_mode;
    DomainDraw draw;
    std::uint64_t seed = 0;
};

EpisodeSetup generate_episode(const EpisodeGenConfig& cfg, const PhaseConfig& phase,
                              const ObservabilityMode& mode, std::uint64_t seed);

}  // namespace plm
