#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plm/geometry.hpp"
#include "plm/world.hpp"

namespace plm {

// Per-episode evaluation record. Tracking errors are RMS over the post-lift
// window (t >= 5 s) against the commanded reference trajectory.
struct EpisodeOutcome {
    int episode_index = 0;
    std::uint64_t seed = 0;
    double lin_vel_rmse = 0.0;   // m/s
    double ang_vel_rmse = 0.0;   // rad/s
    double height_rmse = 0.0;    // m
    bool dropped = false;
    bool robot_failed = false;
    std::vector<double> mean_normal_force;  // per robot, window [5 s, end]
    double mean_return = 0.0;    // team mean of per-robot reward sums
};

struct BatchSummary {
    int episodes = 0;
    int drop_count = 0;
    int failure_count = 0;
    double drop_pct = 0.0;
    double failure_pct = 0.0;
    int tracked_episodes = 0;    // non-dropped, used for the error means
    double lin_vel_mean = 0.0, lin_vel_se = 0.0;
    double ang_vel_mean = 0.0, ang_vel_se = 0.0;
    double height_mean = 0.0, height_se = 0.0;
    double mean_return = 0.0;
};

// sqrt(mean of squared per-sample error norms). Throws on empty input.
double rms_error(std::span<const double> actual, std::span<const double> commanded);
double rms_error(std::span<const Vec2> actual, std::span<const Vec2> commanded);

BatchSummary summarize_batch(std::span<const EpisodeOutcome> outcomes);

// Per-robot mean normal force over a tick window plus opposing-side balance:
// sides partition the robots (side of -1 = unassigned/ignored); balance is
// |sumA - sumB| / max(sumA, sumB), 0 when either side is absent.
struct ForceDistribution {
    std::vector<double> per_robot;
    double side_a_total = 0.0;
    double side_b_total = 0.0;
    double balance = 0.0;
};
ForceDistribution force_distribution(std::span<const std::vector<ContactRecord>> ticks,
                                     std::span<const int> side_of_robot, int n_robots);

// CSV emission (fixed, documented columns).
std::string outcome_csv_header();
std::string outcome_csv_row(const EpisodeOutcome& o);
std::string summary_csv(const BatchSummary& s, std::uint64_t config_hash,
                        std::uint64_t seed);

}  // namespace plm
