#include "plm/es.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace plm {

std::vector<double> centered_ranks(const std::vector<double>& fitness) {
    const int n = int(fitness.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const bool na = std::isnan(fitness[a]), nb = std::isnan(fitness[b]);
        if (na != nb) return na;  // NaN sorts first (worst)
        if (na && nb) return a < b;
        if (fitness[a] != fitness[b]) return fitness[a] < fitness[b];
        return a < b;
    });
    std::vector<double> u(n, 0.0);
    if (n <= 1) return u;
    for (int r = 0; r < n; ++r) u[order[r]] = double(r) / double(n - 1) - 0.5;
    return u;
}

namespace {

Eigen::VectorXd pair_noise(std::uint64_t master, int gen, int pair, Eigen::Index dim) {
    Rng rng(derive_seed(master, 0x4553u, std::uint64_t(gen), std::uint64_t(pair)));
    Eigen::VectorXd e(dim);
    for (Eigen::Index i = 0; i < dim; ++i) e(i) = rng.normal(0.0, 1.0);
    return e;
}

// index-sharded parallel for with deterministic writes
void parallel_for(int count, int n_workers, const std::function<void(int)>& body) {
    if (n_workers <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    };
    std::vector<std::thread> pool;
    const int threads = std::min(n_workers, count);
    pool.reserve(std::size_t(threads));
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace

EsResult es_train(const EpisodeFitness& fitness, Eigen::VectorXd theta0, const EsConfig& cfg,
                  const GenerationCallback& on_generation, int n_workers,
                  int start_generation) {
    if (cfg.population < 2 || cfg.population % 2 != 0)
        throw std::invalid_argument("es_train: population must be even and >= 2");
    if (cfg.sigma < 0.0) throw std::invalid_argument("es_train: sigma must be >= 0");

    const Eigen::Index dim = theta0.size();
    const int pop = cfg.population;
    EsResult res;
    res.theta = std::move(theta0);

    for (int gen = start_generation; gen < cfg.max_generations; ++gen) {
        // common random numbers: all members see the same episode seeds
        std::vector<std::uint64_t> ep_seeds(std::size_t(cfg.episodes_per_member));
        for (int e = 0; e < cfg.episodes_per_member; ++e)
            ep_seeds[std::size_t(e)] = derive_seed(cfg.master_seed, 0x45505Bu,
                                                   std::uint64_t(gen), std::uint64_t(e));

        std::vector<double> member_fitness(std::size_t(pop), 0.0);
        parallel_for(pop, n_workers, [&](int m) {
            const int pair = m / 2;
            const double sign = (m % 2 == 0) ? 1.0 : -1.0;
            const Eigen::VectorXd theta_m =
                res.theta + cfg.sigma * sign * pair_noise(cfg.master_seed, gen, pair, dim);
            double acc = 0.0;
            for (std::uint64_t s : ep_seeds) acc += fitness(theta_m, s);
            member_fitness[std::size_t(m)] = acc / double(cfg.episodes_per_member);
        });

        GenerationStats stats;
        stats.generation = gen;
        double best = -std::numeric_limits<double>::infinity();
        double mean = 0.0;
        int valid = 0;
        for (double f : member_fitness) {
            if (std::isnan(f)) {
                ++stats.nan_members;
                continue;
            }
            best = std::max(best, f);
            mean += f;
            ++valid;
        }
        stats.best_fitness = best;
        stats.mean_fitness = valid > 0 ? mean / double(valid) : std::nan("");

        // rank-shaped antithetic gradient estimate
        const std::vector<double> u = centered_ranks(member_fitness);
        if (cfg.sigma > 0.0) {
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
            for (int pair = 0; pair < pop / 2; ++pair) {
                const double coeff = u[std::size_t(2 * pair)] - u[std::size_t(2 * pair + 1)];
                if (coeff != 0.0)
                    grad += coeff * pair_noise(cfg.master_seed, gen, pair, dim);
            }
            res.theta += (cfg.learning_rate / (double(pop) * cfg.sigma)) * grad;
        }

        // progress probe on fixed seeds, comparable across generations
        double eval_acc = 0.0;
        std::vector<double> eval_vals(std::size_t(std::max(1, cfg.eval_episodes)));
        parallel_for(std::max(1, cfg.eval_episodes), n_workers, [&](int e) {
            eval_vals[std::size_t(e)] =
                fitness(res.theta, derive_seed(cfg.master_seed, 0x4556u, std::uint64_t(e)));
        });
        for (double v : eval_vals) eval_acc += v;
        stats.eval_fitness = eval_acc / double(std::max(1, cfg.eval_episodes));

        res.history.push_back(stats);
        res.generations_run = gen - start_generation + 1;
        if (on_generation && !on_generation(stats, res.theta)) break;
    }
    return res;
}

}  // namespace plm
