#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "plm/rng.hpp"

namespace plm {

// Antithetic evolution strategy with centered-rank fitness shaping. Every
// random quantity re-derives from (master_seed, generation, member), so the
// optimizer is stateless between generations and bit-deterministic for any
// worker count.
struct EsConfig {
    int population = 16;        // must be even (antithetic pairs)
    double sigma = 0.05;
    double learning_rate = 0.1;
    int max_generations = 200;
    int episodes_per_member = 2;  // common-random-number seeds shared per generation
    int eval_episodes = 3;        // fixed seeds for the unperturbed progress probe
    std::uint64_t master_seed = 1;
};

struct GenerationStats {
    int generation = 0;
    double mean_fitness = 0.0;  // population mean (shaped inputs, raw values)
    double best_fitness = 0.0;
    double eval_fitness = 0.0;  // unperturbed params on the fixed eval seeds
    int nan_members = 0;
};

struct EsResult {
    Eigen::VectorXd theta;
    std::vector<GenerationStats> history;
    int generations_run = 0;
};

// fitness(theta, episode_seed) -> scalar return (NaN allowed: ranked last)
using EpisodeFitness = std::function<double(const Eigen::VectorXd&, std::uint64_t)>;
// returning false stops training after the current generation
using GenerationCallback = std::function<bool(const GenerationStats&, const Eigen::VectorXd&)>;

EsResult es_train(const EpisodeFitness& fitness, Eigen::VectorXd theta0, const EsConfig& cfg,
                  const GenerationCallback& on_generation = nullptr, int n_workers = 1,
                  int start_generation = 0);

// Centered-rank utilities in [-0.5, 0.5]; NaNs rank lowest; ties break by
// index so the result is deterministic. Exposed for tests.
std::vector<double> centered_ranks(const std::vector<double>& fitness);

}  // namespace plm
