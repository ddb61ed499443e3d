#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plm/commands.hpp"
#include "plm/curriculum.hpp"
#include "plm/es.hpp"
#include "plm/rewards.hpp"

namespace plm {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SceneConfig {
    std::string shape = "box";         // box | cylinder
    Vec3 box_dims{1.0, 1.5, 0.7};
    double cyl_radius = 0.25;
    double cyl_length = 0.9;
    double payload_mass = 2.0;         // evaluation scenes; training follows the phase table
    int n_robots = 2;
    std::string arrangement = "even";  // even | sampled
    double contact_height = 0.35;
    double base_standoff = 0.55;
};

struct TrainConfig {
    EsConfig es;
    int checkpoint_every = 25;
    std::vector<int> phases{1};
    // contact-frame pose update-rate anneal: (start generation, hz) steps
    std::vector<std::pair<int, double>> anneal;
};

// The whole experiment surface. A config plus a seed fully determines a run.
struct ExperimentConfig {
    int schema_version = 1;
    SceneConfig scene;
    int phase = 3;
    std::string obs_mode = "cf_plus";  // cf_plus | cf_init
    double cf_update_hz = 50.0;
    std::string controller = "scripted";  // scripted | rigid_oracle | learned
    std::string params_path;
    CommandRanges ranges;
    bool randomize = true;
    RandomizationConfig rand;
    RewardWeights weights;
    KernelScales scales;
    int episodes = 20;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out_dir = "out";
    TrainConfig train;
};

// Canonical JSON (sorted keys); the config hash is FNV-1a over this text.
std::string config_to_json_text(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

// Parse + strict-validate: unknown keys anywhere are errors (ConfigError with
// the offending path), as are type mismatches and semantic violations.
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Semantic checks shared by both loaders; throws ConfigError.
void validate_config(const ExperimentConfig& cfg);

// Assembled views for the rest of the system.
PayloadShape payload_shape(const SceneConfig& scene);
EpisodeGenConfig episode_gen_config(const ExperimentConfig& cfg);
ObservabilityMode observability_mode(const ExperimentConfig& cfg);

}  // namespace plm
