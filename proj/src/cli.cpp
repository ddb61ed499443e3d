#include "plm/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "plm/config.hpp"
#include "plm/log.hpp"
#include "plm/metrics.hpp"
#include "plm/runner.hpp"
#include "plm/train.hpp"

namespace plm {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDrop = 3;
constexpr int kExitRobotFailure = 4;
constexpr int kExitIo = 5;

struct Overrides {
    std::string config_path;
    std::int64_t seed = -1;
    int workers = 0;
    std::string out_dir;
    int phase = 0;
    std::string controller;
    std::string mode;
    double cf_update_hz = -1.0;
    int episodes = 0;
    std::string params_path;
};

void add_common_options(CLI::App* sub, Overrides& ov) {
    sub->add_option("--config", ov.config_path, "experiment config (JSON)");
    sub->add_option("--seed", ov.seed, "master seed override");
    sub->add_option("--workers", ov.workers, "worker thread count override");
    sub->add_option("--out-dir", ov.out_dir, "output directory override")
        ->envname("PLM_OUT_DIR");
    sub->add_option("--phase", ov.phase, "curriculum phase override (1-3)");
    sub->add_option("--controller", ov.controller,
                    "controller override: scripted | rigid_oracle | learned");
    sub->add_option("--mode", ov.mode, "observability override: cf_plus | cf_init");
    sub->add_option("--cf-update-hz", ov.cf_update_hz,
                    "pose update rate override (50, 25, 5, 0.25, 0)");
    sub->add_option("--episodes", ov.episodes, "episode count override");
    sub->add_option("--params", ov.params_path, "policy parameter file override");
}

ExperimentConfig effective_config(const Overrides& ov) {
    ExperimentConfig cfg =
        ov.config_path.empty() ? ExperimentConfig{} : load_config(ov.config_path);
    if (ov.seed >= 0) cfg.seed = std::uint64_t(ov.seed);
    if (ov.workers > 0) cfg.workers = ov.workers;
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (ov.phase > 0) cfg.phase = ov.phase;
    if (!ov.controller.empty()) cfg.controller = ov.controller;
    if (!ov.mode.empty()) cfg.obs_mode = ov.mode;
    if (ov.cf_update_hz >= 0.0) cfg.cf_update_hz = ov.cf_update_hz;
    if (ov.episodes > 0) cfg.episodes = ov.episodes;
    if (!ov.params_path.empty()) cfg.params_path = ov.params_path;
    cfg.train.es.master_seed = cfg.seed;
    validate_config(cfg);
    return cfg;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    f << text;
}

int batch_exit_code(const std::vector<EpisodeResult>& results) {
    bool dropped = false;
    for (const EpisodeResult& r : results) {
        if (r.outcome.robot_failed) return kExitRobotFailure;
        dropped = dropped || r.outcome.dropped;
    }
    return dropped ? kExitDrop : kExitOk;
}

int run_or_eval(const Overrides& ov, bool keep_logs) {
    const ExperimentConfig cfg = effective_config(ov);
    EpisodeRequest base = make_episode_request(cfg);

    PolicyParams params;
    if (base.controller == ControllerKind::learned) {
        params = load_params(cfg.params_path);
        base.policy = &params;
    }

    BatchRequest batch;
    batch.base = base;
    batch.episodes = cfg.episodes;
    batch.workers = cfg.workers;
    batch.out_dir = keep_logs ? cfg.out_dir : std::string{};

    const std::vector<EpisodeResult> results = run_batch(batch);

    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "config.json", config_to_json_text(cfg) + "\n");

    std::ostringstream outcomes;
    outcomes << outcome_csv_header() << '\n';
    std::vector<EpisodeOutcome> flat;
    flat.reserve(results.size());
    for (const EpisodeResult& r : results) {
        outcomes << outcome_csv_row(r.outcome) << '\n';
        flat.push_back(r.outcome);
    }
    write_text(fs::path(cfg.out_dir) / "outcomes.csv", outcomes.str());

    const BatchSummary summary = summarize_batch(flat);
    write_text(fs::path(cfg.out_dir) / "summary.csv",
               summary_csv(summary, config_hash(cfg), cfg.seed));

    std::cout << "episodes " << summary.episodes << "  drops " << summary.drop_count << " ("
              << std::fixed << std::setprecision(1) << summary.drop_pct << "%)  failures "
              << summary.failure_count << " (" << summary.failure_pct << "%)\n"
              << std::setprecision(4) << "lin vel rmse " << summary.lin_vel_mean << " m/s  ang "
              << summary.ang_vel_mean << " rad/s  height " << summary.height_mean << " m  ("
              << summary.tracked_episodes << " tracked)\n"
              << "mean return " << summary.mean_return << '\n'
              << "config " << hex64(config_hash(cfg)) << "  seed " << cfg.seed << "  -> "
              << cfg.out_dir << '\n';
    return batch_exit_code(results);
}

int run_train(const Overrides& ov, const std::string& resume) {
    const ExperimentConfig cfg = effective_config(ov);
    const TrainResult res = train_policy(cfg, resume);
    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "config.json", config_to_json_text(cfg) + "\n");
    std::cout << "trained " << res.generations << " generations  -> " << res.params_path
              << '\n';
    if (!res.history.empty())
        std::cout << "final eval fitness " << res.history.back().stats.eval_fitness << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// export: per-tick CSV series from episode logs

std::vector<fs::path> log_files(const std::string& target) {
    std::vector<fs::path> files;
    const fs::path p(target);
    if (fs::is_directory(p)) {
        for (const auto& entry : fs::directory_iterator(p)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("ep_", 0) == 0 && entry.path().extension() == ".jsonl")
                files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
    } else if (fs::exists(p)) {
        files.push_back(p);
    }
    if (files.empty()) throw std::runtime_error("export: no episode logs at " + target);
    return files;
}

int log_episode_index(const LogFile& log) {
    return json::parse(log.header_json).value("episode", 0);
}

void export_forces(const std::vector<fs::path>& files, std::ostream& out) {
    out << "episode,tick,t,robot,normal_force,tangent_force_1,tangent_force_2,in_contact\n";
    out << std::setprecision(17);
    for (const fs::path& f : files) {
        const LogFile log = read_log(f.string());
        const int ep = log_episode_index(log);
        for (const TickRecord& tick : log.ticks)
            for (size_t r = 0; r < tick.robots.size(); ++r) {
                const RobotTick& rt = tick.robots[r];
                out << ep << ',' << tick.tick << ',' << tick.t << ',' << r << ','
                    << rt.normal_force << ',' << rt.tangent_force[0] << ','
                    << rt.tangent_force[1] << ',' << (rt.in_contact ? 1 : 0) << '\n';
            }
    }
}

void export_errors(const std::vector<fs::path>& files, std::ostream& out) {
    out << "episode,tick,t,vx_cmd,vy_cmd,omega_cmd,height_cmd,"
           "vx_actual,vy_actual,omega_actual,height_actual\n";
    out << std::setprecision(17);
    for (const fs::path& f : files) {
        const LogFile log = read_log(f.string());
        const int ep = log_episode_index(log);
        for (const TickRecord& tick : log.ticks) {
            // planar velocity re-expressed in the commanded frame's yaw
            const double yaw = tick.tf_active ? tick.tf[2] : 0.0;
            const double c = std::cos(-yaw), s = std::sin(-yaw);
            const double vx = tick.payload_twist[0], vy = tick.payload_twist[1];
            out << ep << ',' << tick.tick << ',' << tick.t << ',' << tick.command[0] << ','
                << tick.command[1] << ',' << tick.command[2] << ','
                << (tick.tf_active ? tick.tf[3] : 0.0) << ',' << (c * vx - s * vy) << ','
                << (s * vx + c * vy) << ',' << tick.payload_twist[5] << ','
                << tick.root_height << '\n';
        }
    }
}

void export_outcomes(const std::vector<fs::path>& files, std::ostream& out) {
    out << outcome_csv_header() << '\n';
    for (const fs::path& f : files) {
        const LogFile log = read_log(f.string());
        if (log.outcome_json.empty())
            throw std::runtime_error("export: " + f.string() + " has no outcome record");
        const json j = json::parse(log.outcome_json);
        EpisodeOutcome o;
        o.episode_index = j.at("episode").get<int>();
        o.seed = j.at("seed").get<std::uint64_t>();
        o.lin_vel_rmse = j.at("lin_vel_rmse").get<double>();
        o.ang_vel_rmse = j.at("ang_vel_rmse").get<double>();
        o.height_rmse = j.at("height_rmse").get<double>();
        o.dropped = j.at("dropped").get<bool>();
        o.robot_failed = j.at("robot_failed").get<bool>();
        o.mean_normal_force = j.at("mean_normal_force").get<std::vector<double>>();
        o.mean_return = j.at("mean_return").get<double>();
        out << outcome_csv_row(o) << '\n';
    }
}

int run_export(const std::string& target, const std::string& kind, const std::string& out) {
    if (kind != "forces" && kind != "errors" && kind != "outcomes")
        throw ConfigError("export: unknown kind '" + kind + "'");
    const std::vector<fs::path> files = log_files(target);
    std::ostringstream text;
    if (kind == "forces")
        export_forces(files, text);
    else if (kind == "errors")
        export_errors(files, text);
    else
        export_outcomes(files, text);
    if (out.empty() || out == "-") {
        std::cout << text.str();
    } else {
        write_text(out, text.str());
        std::cout << "wrote " << out << '\n';
    }
    return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"decentralized multi-robot pinch-lift-move transport testbed"};
    app.require_subcommand(1);

    Overrides ov;
    std::string resume, export_target, export_kind = "outcomes", export_out;

    CLI::App* run = app.add_subcommand("run", "run episodes with trajectory logs");
    add_common_options(run, ov);
    CLI::App* eval = app.add_subcommand("eval", "run episodes, metrics only");
    add_common_options(eval, ov);
    CLI::App* train = app.add_subcommand("train", "policy search over the phase curriculum");
    add_common_options(train, ov);
    train->add_option("--resume", resume, "checkpoint to continue from");
    CLI::App* exp = app.add_subcommand("export", "CSV series from episode logs");
    exp->add_option("--log", export_target, "episode log file or directory")->required();
    exp->add_option("--kind", export_kind, "forces | errors | outcomes");
    exp->add_option("--out", export_out, "output CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) return run_or_eval(ov, true);
        if (eval->parsed()) return run_or_eval(ov, false);
        if (train->parsed()) return run_train(ov, resume);
        if (exp->parsed()) return run_export(export_target, export_kind, export_out);
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return kExitUnexpected;
    }
}

}  // namespace plm
