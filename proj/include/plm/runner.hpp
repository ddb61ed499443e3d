#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plm/config.hpp"
#include "plm/curriculum.hpp"
#include "plm/log.hpp"
#include "plm/metrics.hpp"
#include "plm/policy.hpp"
#include "plm/rewards.hpp"
#include "plm/scripted.hpp"
#include "plm/world.hpp"

namespace plm {

enum class ControllerKind { scripted, rigid_oracle, learned };

ControllerKind controller_kind(const std::string& name);  // throws ConfigError

// Everything one episode needs. `policy` must outlive the call for the
// learned controller. `config_json` (canonical text) is embedded in the log
// header when a log path is set.
struct EpisodeRequest {
    EpisodeGenConfig gen;
    PhaseConfig phase;
    ObservabilityMode obs_mode;
    ControllerKind controller = ControllerKind::scripted;
    const PolicyParams* policy = nullptr;
    ScriptedParams scripted;
    RewardWeights weights;
    KernelScales scales;
    std::uint64_t seed = 1;
    int episode_index = 0;
    std::string log_path;          // empty -> no trajectory log
    std::string config_json;
    std::uint64_t config_hash = 0;
    bool keep_contacts = false;    // retain post-lift contact snapshots
};

struct EpisodeResult {
    EpisodeOutcome outcome;
    // largest unweighted alignment/tracking errors seen on any tick
    double max_abs_r_contact = 0.0;
    double max_abs_r_track = 0.0;
    long cf_updates_after_2s = 0;  // pose-channel refreshes past the initial window
    bool diverged = false;
    long ticks_run = 0;
    std::vector<std::vector<ContactRecord>> post5_contacts;  // if keep_contacts
    EpisodeSetup setup;            // the realized scene/command/draw
};

// Run one full episode: spawn, control loop, rewards, detectors, logging.
// The episode ends early on a drop or robot failure. Divergence of the
// integrator is reported as a drop with `diverged` set.
EpisodeResult run_episode(const EpisodeRequest& req);

// Batch driver: episode i uses seed derive_seed(base.seed, i) and logs to
// out_dir/ep_<i>.jsonl (if out_dir is set). Results are index-ordered and
// bit-identical for any worker count.
struct BatchRequest {
    EpisodeRequest base;
    int episodes = 1;
    int workers = 1;
    std::string out_dir;
};
std::vector<EpisodeResult> run_batch(const BatchRequest& req);

// Evaluation-flavored request from a config: phase table entry with the mass
// pinned to scene.payload_mass, scene/observability/reward settings applied.
// The policy pointer is left null (the caller owns parameter loading).
EpisodeRequest make_episode_request(const ExperimentConfig& cfg);

std::string episode_log_name(int episode_index);

}  // namespace plm
