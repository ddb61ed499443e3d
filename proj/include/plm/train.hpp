#pragma once

#include <string>
#include <vector>

#include "plm/config.hpp"
#include "plm/es.hpp"
#include "plm/policy.hpp"

namespace plm {

struct TrainProgress {
    GenerationStats stats;
    int phase = 1;            // curriculum stage the generation trained on
    double cf_update_hz = 50.0;
};

struct TrainResult {
    PolicyParams params;
    std::vector<TrainProgress> history;
    int generations = 0;      // completed (global counter, includes resumed)
    std::string params_path;  // final parameter file
};

// Full training run driven by the config: the phase list runs sequentially
// (train.es.max_generations each), the pose-update anneal switches at its
// generation marks, fitness is the mean episode return. Writes
// train_history.csv, periodic checkpoints, and params_final.bin into
// cfg.out_dir. `resume_path` restarts from a saved checkpoint (corrupt or
// mismatched files are refused via std::runtime_error).
TrainResult train_policy(const ExperimentConfig& cfg, const std::string& resume_path = "");

}  // namespace plm
