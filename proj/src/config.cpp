#include "plm/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "plm/rng.hpp"

namespace plm {

using nlohmann::json;

namespace {

json vec2_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec2 vec2_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2)
        throw ConfigError(std::string(what) + ": expected [lo, hi]");
    return {j[0].get<double>(), j[1].get<double>()};
}

Vec3 vec3_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        throw ConfigError(std::string(what) + ": expected 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["schema_version"] = c.schema_version;

    json scene;
    scene["shape"] = c.scene.shape;
    scene["box_dims"] = vec3_json(c.scene.box_dims);
    scene["cyl_radius"] = c.scene.cyl_radius;
    scene["cyl_length"] = c.scene.cyl_length;
    scene["payload_mass"] = c.scene.payload_mass;
    scene["n_robots"] = c.scene.n_robots;
    scene["arrangement"] = c.scene.arrangement;
    scene["contact_height"] = c.scene.contact_height;
    scene["base_standoff"] = c.scene.base_standoff;
    j["scene"] = scene;

    j["phase"] = c.phase;
    j["obs_mode"] = c.obs_mode;
    j["cf_update_hz"] = c.cf_update_hz;
    j["controller"] = c.controller;
    j["params_path"] = c.params_path;

    json ranges;
    ranges["vx"] = vec2_json(c.ranges.vx);
    ranges["vy"] = vec2_json(c.ranges.vy);
    ranges["omega"] = vec2_json(c.ranges.omega);
    ranges["height"] = vec2_json(c.ranges.height);
    j["command_ranges"] = ranges;

    j["randomize"] = c.randomize;
    json rnd;
    rnd["friction_range"] = vec2_json(c.rand.friction_range);
    rnd["base_tau_range"] = vec2_json(c.rand.base_tau_range);
    rnd["base_accel_range"] = vec2_json(c.rand.base_accel_range);
    rnd["init_pos_sigma"] = c.rand.init_pos_sigma;
    rnd["init_yaw_sigma"] = c.rand.init_yaw_sigma;
    // sensing-noise defaults are artifact choices (source values unpublished)
    rnd["obs_pos_sigma"] = c.rand.obs_noise.pos_sigma;
    rnd["obs_rot_sigma"] = c.rand.obs_noise.rot_sigma;
    rnd["obs_twist_sigma"] = c.rand.obs_noise.twist_sigma;
    rnd["obs_force_sigma"] = c.rand.obs_noise.force_sigma;
    rnd["action_noise_sigma"] = c.rand.action_noise_sigma;
    rnd["ext_force_max"] = c.rand.ext_force_max;
    rnd["ext_force_rate"] = c.rand.ext_force_rate;
    rnd["ext_force_duration"] = c.rand.ext_force_duration;
    j["randomization"] = rnd;

    json w;
    w["contact_constellation"] = c.weights.contact_constellation;
    w["base_tracking"] = c.weights.base_tracking;
    w["binary_contact"] = c.weights.binary_contact;
    w["height_tracking"] = c.weights.height_tracking;
    w["velocity_tracking"] = c.weights.velocity_tracking;
    w["torque_joint_motion"] = c.weights.torque_joint_motion;
    w["action_smoothness"] = c.weights.action_smoothness;
    w["leg_motion"] = c.weights.leg_motion;
    w["levelness"] = c.weights.levelness;
    w["payload_acceleration"] = c.weights.payload_acceleration;
    w["outside_range"] = c.weights.outside_range;
    j["reward_weights"] = w;

    json k;
    k["height_sigma"] = c.scales.height_sigma;
    k["velocity_sigma"] = c.scales.velocity_sigma;
    j["kernel_scales"] = k;

    j["episodes"] = c.episodes;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["out_dir"] = c.out_dir;

    json tr;
    tr["population"] = c.train.es.population;
    tr["sigma"] = c.train.es.sigma;
    tr["learning_rate"] = c.train.es.learning_rate;
    tr["max_generations"] = c.train.es.max_generations;
    tr["episodes_per_member"] = c.train.es.episodes_per_member;
    tr["eval_episodes"] = c.train.es.eval_episodes;
    tr["checkpoint_every"] = c.train.checkpoint_every;
    tr["phases"] = c.train.phases;
    json anneal = json::array();
    for (const auto& [gen, hz] : c.train.anneal) anneal.push_back(json::array({gen, hz}));
    tr["anneal"] = anneal;
    j["train"] = tr;
    return j;
}

// every object key in `in` must exist in `ref` (recursing through objects)
void check_unknown_keys(const json& in, const json& ref, const std::string& path) {
    if (!in.is_object()) return;
    if (!ref.is_object())
        throw ConfigError("config: unexpected object at " + (path.empty() ? "<root>" : path));
    for (const auto& [key, value] : in.items()) {
        if (!ref.contains(key))
            throw ConfigError("config: unknown key '" + (path.empty() ? key : path + "." + key) +
                              "'");
        check_unknown_keys(value, ref.at(key), path.empty() ? key : path + "." + key);
    }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void read_vec2(const json& j, const char* key, Vec2& out) {
    if (j.contains(key)) out = vec2_from(j.at(key), key);
}

ExperimentConfig from_json(const json& j) {
    ExperimentConfig c;
    check_unknown_keys(j, to_json(c), "");

    read_if(j, "schema_version", c.schema_version);
    if (j.contains("scene")) {
        const json& s = j.at("scene");
        read_if(s, "shape", c.scene.shape);
        if (s.contains("box_dims")) c.scene.box_dims = vec3_from(s.at("box_dims"), "box_dims");
        read_if(s, "cyl_radius", c.scene.cyl_radius);
        read_if(s, "cyl_length", c.scene.cyl_length);
        read_if(s, "payload_mass", c.scene.payload_mass);
        read_if(s, "n_robots", c.scene.n_robots);
        read_if(s, "arrangement", c.scene.arrangement);
        read_if(s, "contact_height", c.scene.contact_height);
        read_if(s, "base_standoff", c.scene.base_standoff);
    }
    read_if(j, "phase", c.phase);
    read_if(j, "obs_mode", c.obs_mode);
    read_if(j, "cf_update_hz", c.cf_update_hz);
    read_if(j, "controller", c.controller);
    read_if(j, "params_path", c.params_path);
    if (j.contains("command_ranges")) {
        const json& r = j.at("command_ranges");
        read_vec2(r, "vx", c.ranges.vx);
        read_vec2(r, "vy", c.ranges.vy);
        read_vec2(r, "omega", c.ranges.omega);
        read_vec2(r, "height", c.ranges.height);
    }
    read_if(j, "randomize", c.randomize);
    if (j.contains("randomization")) {
        const json& r = j.at("randomization");
        read_vec2(r, "friction_range", c.rand.friction_range);
        read_vec2(r, "base_tau_range", c.rand.base_tau_range);
        read_vec2(r, "base_accel_range", c.rand.base_accel_range);
        read_if(r, "init_pos_sigma", c.rand.init_pos_sigma);
        read_if(r, "init_yaw_sigma", c.rand.init_yaw_sigma);
        read_if(r, "obs_pos_sigma", c.rand.obs_noise.pos_sigma);
        read_if(r, "obs_rot_sigma", c.rand.obs_noise.rot_sigma);
        read_if(r, "obs_twist_sigma", c.rand.obs_noise.twist_sigma);
        read_if(r, "obs_force_sigma", c.rand.obs_noise.force_sigma);
        read_if(r, "action_noise_sigma", c.rand.action_noise_sigma);
        read_if(r, "ext_force_max", c.rand.ext_force_max);
        read_if(r, "ext_force_rate", c.rand.ext_force_rate);
        read_if(r, "ext_force_duration", c.rand.ext_force_duration);
    }
    if (j.contains("reward_weights")) {
        const json& w = j.at("reward_weights");
        read_if(w, "contact_constellation", c.weights.contact_constellation);
        read_if(w, "base_tracking", c.weights.base_tracking);
        read_if(w, "binary_contact", c.weights.binary_contact);
        read_if(w, "height_tracking", c.weights.height_tracking);
        read_if(w, "velocity_tracking", c.weights.velocity_tracking);
        read_if(w, "torque_joint_motion", c.weights.torque_joint_motion);
        read_if(w, "action_smoothness", c.weights.action_smoothness);
        read_if(w, "leg_motion", c.weights.leg_motion);
        read_if(w, "levelness", c.weights.levelness);
        read_if(w, "payload_acceleration", c.weights.payload_acceleration);
        read_if(w, "outside_range", c.weights.outside_range);
    }
    if (j.contains("kernel_scales")) {
        const json& k = j.at("kernel_scales");
        read_if(k, "height_sigma", c.scales.height_sigma);
        read_if(k, "velocity_sigma", c.scales.velocity_sigma);
    }
    read_if(j, "episodes", c.episodes);
    read_if(j, "seed", c.seed);
    read_if(j, "workers", c.workers);
    read_if(j, "out_dir", c.out_dir);
    if (j.contains("train")) {
        const json& t = j.at("train");
        read_if(t, "population", c.train.es.population);
        read_if(t, "sigma", c.train.es.sigma);
        read_if(t, "learning_rate", c.train.es.learning_rate);
        read_if(t, "max_generations", c.train.es.max_generations);
        read_if(t, "episodes_per_member", c.train.es.episodes_per_member);
        read_if(t, "eval_episodes", c.train.es.eval_episodes);
        read_if(t, "checkpoint_every", c.train.checkpoint_every);
        if (t.contains("phases")) c.train.phases = t.at("phases").get<std::vector<int>>();
        if (t.contains("anneal")) {
            c.train.anneal.clear();
            for (const auto& step : t.at("anneal")) {
                if (!step.is_array() || step.size() != 2)
                    throw ConfigError("config: train.anneal entries are [generation, hz]");
                c.train.anneal.emplace_back(step[0].get<int>(), step[1].get<double>());
            }
        }
    }
    c.train.es.master_seed = c.seed;
    validate_config(c);
    return c;
}

bool valid_update_hz(double hz) {
    for (double v : {50.0, 25.0, 5.0, 0.25, 0.0})
        if (std::abs(hz - v) < 1e-12) return true;
    return false;
}

}  // namespace

std::string config_to_json_text(const ExperimentConfig& cfg) { return to_json(cfg).dump(2); }

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    // execution knobs must not change the experiment identity: the same
    // config run with more workers or a different output directory has to
    // produce byte-identical result files, hash included
    ExperimentConfig canon = cfg;
    canon.workers = 1;
    canon.out_dir.clear();
    const std::string text = config_to_json_text(canon);
    return fnv1a64(text.data(), text.size());
}

ExperimentConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }
    try {
        return from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: type error: ") + e.what());
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return config_from_json_text(ss.str());
}

void validate_config(const ExperimentConfig& c) {
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (c.schema_version != 1) fail("unsupported schema_version");
    if (c.scene.shape != "box" && c.scene.shape != "cylinder") fail("scene.shape must be box or cylinder");
    if (c.scene.payload_mass <= 0.0) fail("scene.payload_mass must be > 0");
    if (c.scene.n_robots < 2) fail("scene.n_robots must be >= 2");
    if (c.scene.arrangement != "even" && c.scene.arrangement != "sampled")
        fail("scene.arrangement must be even or sampled");
    if ((c.scene.box_dims.array() <= 0.0).any()) fail("scene.box_dims must be positive");
    if (c.scene.cyl_radius <= 0.0 || c.scene.cyl_length <= 0.0)
        fail("cylinder dimensions must be positive");
    if (c.phase < 1 || c.phase > 3) fail("phase must be 1, 2, or 3");
    if (c.obs_mode != "cf_plus" && c.obs_mode != "cf_init")
        fail("obs_mode must be cf_plus or cf_init");
    if (!valid_update_hz(c.cf_update_hz)) fail("cf_update_hz must be 50, 25, 5, 0.25, or 0");
    if (c.controller != "scripted" && c.controller != "rigid_oracle" && c.controller != "learned")
        fail("controller must be scripted, rigid_oracle, or learned");
    if (c.controller == "learned" && c.params_path.empty())
        fail("learned controller requires params_path");
    auto range_ok = [](const Vec2& r) { return r(0) <= r(1); };
    if (!range_ok(c.ranges.vx) || !range_ok(c.ranges.vy) || !range_ok(c.ranges.omega) ||
        !range_ok(c.ranges.height))
        fail("command_ranges must satisfy lo <= hi");
    if (!range_ok(c.rand.friction_range) || c.rand.friction_range(0) <= 0.0)
        fail("friction_range must be positive and ordered");
    if (!range_ok(c.rand.base_tau_range) || c.rand.base_tau_range(0) <= 0.0)
        fail("base_tau_range must be positive and ordered");
    if (!range_ok(c.rand.base_accel_range) || c.rand.base_accel_range(0) <= 0.0)
        fail("base_accel_range must be positive and ordered");
    if (c.rand.obs_noise.pos_sigma < 0.0 || c.rand.obs_noise.rot_sigma < 0.0 ||
        c.rand.obs_noise.twist_sigma < 0.0 || c.rand.obs_noise.force_sigma < 0.0 ||
        c.rand.action_noise_sigma < 0.0)
        fail("noise sigmas must be >= 0");
    if (c.episodes < 1) fail("episodes must be >= 1");
    if (c.workers < 1) fail("workers must be >= 1");
    if (c.train.es.population < 2 || c.train.es.population % 2 != 0)
        fail("train.population must be even and >= 2");
    if (c.train.es.sigma < 0.0) fail("train.sigma must be >= 0");
    if (c.train.es.max_generations < 0) fail("train.max_generations must be >= 0");
    if (c.train.checkpoint_every < 1) fail("train.checkpoint_every must be >= 1");
    for (int p : c.train.phases)
        if (p < 1 || p > 3) fail("train.phases entries must be 1, 2, or 3");
    for (const auto& [gen, hz] : c.train.anneal) {
        if (gen < 0) fail("train.anneal generations must be >= 0");
        if (!valid_update_hz(hz)) fail("train.anneal rates must be 50, 25, 5, 0.25, or 0");
    }
}

PayloadShape payload_shape(const SceneConfig& scene) {
    if (scene.shape == "box") return PayloadShape::box(scene.box_dims);
    return PayloadShape::cylinder(scene.cyl_radius, scene.cyl_length);
}

EpisodeGenConfig episode_gen_config(const ExperimentConfig& cfg) {
    EpisodeGenConfig g;
    g.shape = payload_shape(cfg.scene);
    g.n_robots = cfg.scene.n_robots;
    g.sampled_frames = cfg.scene.arrangement == "sampled";
    g.contact_height = cfg.scene.contact_height;
    g.base_standoff = cfg.scene.base_standoff;
    g.ranges = cfg.ranges;
    g.rand = cfg.rand;
    g.randomize = cfg.randomize;
    return g;
}

ObservabilityMode observability_mode(const ExperimentConfig& cfg) {
    ObservabilityMode m;
    m.mode = cfg.obs_mode == "cf_init" ? ObservabilityMode::Mode::cf_init
                                       : ObservabilityMode::Mode::cf_plus;
    m.update_hz = cfg.cf_update_hz;
    return m;
}

}  // namespace plm
