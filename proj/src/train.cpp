#include "plm/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "plm/runner.hpp"

namespace plm {

namespace {

double anneal_hz(const ExperimentConfig& cfg, int generation) {
    double hz = cfg.cf_update_hz;
    int best = -1;
    for (const auto& [gen, value] : cfg.train.anneal)
        if (gen <= generation && gen > best) {
            best = gen;
            hz = value;
        }
    return hz;
}

int next_anneal_boundary(const ExperimentConfig& cfg, int generation, int limit) {
    int boundary = limit;
    for (const auto& [gen, value] : cfg.train.anneal) {
        (void)value;
        if (gen > generation && gen < boundary) boundary = gen;
    }
    return boundary;
}

std::string checkpoint_path(const std::string& dir, int generation) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "checkpoint_%06d.bin", generation);
    return (std::filesystem::path(dir) / buf).string();
}

}  // namespace

TrainResult train_policy(const ExperimentConfig& cfg, const std::string& resume_path) {
    const PolicyConfig pc;
    std::filesystem::create_directories(cfg.out_dir);

    TrainResult result;
    int start_gen = 0;
    if (!resume_path.empty()) {
        std::uint64_t iter = 0;
        result.params = load_params(resume_path, nullptr, &iter);
        if (result.params.cfg.obs_dim != pc.obs_dim ||
            result.params.cfg.action_dim != pc.action_dim)
            throw std::runtime_error("train: checkpoint dimensions do not match");
        start_gen = int(iter);
    } else {
        Rng init_rng(derive_seed(cfg.seed, 0x494E4954ull));
        result.params = PolicyParams::random_init(pc, init_rng);
    }

    const int per_phase = cfg.train.es.max_generations;
    const int total = per_phase * int(cfg.train.phases.size());

    const std::string history_path =
        (std::filesystem::path(cfg.out_dir) / "train_history.csv").string();
    std::ofstream history(history_path, start_gen > 0 ? std::ios::app : std::ios::trunc);
    if (!history) throw std::runtime_error("train: cannot open " + history_path);
    if (start_gen == 0)
        history << "generation,phase,cf_update_hz,mean_fitness,best_fitness,eval_fitness,"
                   "nan_members\n";

    const EpisodeGenConfig gen_cfg = episode_gen_config(cfg);
    const ObservabilityMode base_mode = observability_mode(cfg);

    Eigen::VectorXd theta = result.params.theta;
    int g = start_gen;
    while (g < total) {
        const int phase_idx = g / per_phase;
        const int phase_number = cfg.train.phases[size_t(phase_idx)];
        const PhaseConfig phase = make_phase_config(phase_number);
        const int phase_end = (phase_idx + 1) * per_phase;
        const double hz = anneal_hz(cfg, g);
        const int chunk_end = next_anneal_boundary(cfg, g, phase_end);

        ObservabilityMode mode = base_mode;
        mode.update_hz = hz;

        EpisodeRequest base;
        base.gen = gen_cfg;
        base.phase = phase;
        base.obs_mode = mode;
        base.controller = ControllerKind::learned;
        base.weights = cfg.weights;
        base.scales = cfg.scales;

        const EpisodeFitness fitness = [&base, &pc](const Eigen::VectorXd& th,
                                                     std::uint64_t episode_seed) {
            const PolicyParams params{pc, th};
            EpisodeRequest req = base;
            req.policy = &params;
            req.seed = episode_seed;
            try {
                const double r = run_episode(req).outcome.mean_return;
                return std::isfinite(r) ? r : std::numeric_limits<double>::quiet_NaN();
            } catch (const std::exception&) {
                return std::numeric_limits<double>::quiet_NaN();
            }
        };

        const GenerationCallback callback = [&](const GenerationStats& stats,
                                                const Eigen::VectorXd& th) {
            history << stats.generation << ',' << phase_number << ',' << hz << ','
                    << stats.mean_fitness << ',' << stats.best_fitness << ','
                    << stats.eval_fitness << ',' << stats.nan_members << '\n';
            history.flush();
            result.history.push_back({stats, phase_number, hz});
            if ((stats.generation + 1) % cfg.train.checkpoint_every == 0 ||
                stats.generation + 1 == total) {
                const std::string path = checkpoint_path(cfg.out_dir, stats.generation + 1);
                save_params(path, {pc, th}, cfg.seed, std::uint64_t(stats.generation + 1));
            }
            return true;
        };

        EsConfig ec = cfg.train.es;
        ec.max_generations = chunk_end;
        EsResult res = es_train(fitness, theta, ec, callback, cfg.workers, g);
        theta = std::move(res.theta);
        if (res.generations_run <= 0) break;
        g += res.generations_run;
    }

    result.params = PolicyParams{pc, theta};
    result.generations = g;
    result.params_path = (std::filesystem::path(cfg.out_dir) / "params_final.bin").string();
    save_params(result.params_path, result.params, cfg.seed, std::uint64_t(g));
    return result;
}

}  // namespace plm
