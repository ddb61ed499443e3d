#include "plm/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <thread>

#include <json.hpp>

namespace plm {

using nlohmann::json;

ControllerKind controller_kind(const std::string& name) {
    if (name == "scripted") return ControllerKind::scripted;
    if (name == "rigid_oracle") return ControllerKind::rigid_oracle;
    if (name == "learned") return ControllerKind::learned;
    throw ConfigError("unknown controller '" + name + "'");
}

namespace {

constexpr double kLiftDeadline = 5.0;
constexpr double kTimeEps = 1e-9;
constexpr double kOraclePress = 0.0005;  // m of pad penetration in welded mode

// inverse of integrate_action: express a bounded setpoint change as a raw
// action in [-1,1]^9 so every controller logs through the same channel
Eigen::VectorXd encode_action(const RobotAction& a, const Pose& cur, const ActionBounds& b) {
    Eigen::VectorXd r(kActionDim);
    r.head<3>() = (a.pad_target_rel.position - cur.position) / b.pad_pos_delta;
    r.segment<3>(3) =
        orientation_error(a.pad_target_rel.orientation, cur.orientation) / b.pad_rot_delta;
    r(6) = a.base_v.x() / b.base_v;
    r(7) = a.base_v.y() / b.base_v;
    r(8) = a.base_omega / b.base_omega;
    return r.cwiseMax(-1.0).cwiseMin(1.0);
}

Pose ground_frame(const TargetFrame& tf) {
    return Pose::from_yaw(tf.yaw, {tf.position.x(), tf.position.y(), 0.0});
}

// pins the payload, bases, and pads to the commanded frame (privileged
// reference mode: the physics only evaluates contacts at these poses)
void weld_to_frame(WorldState& w, const TargetFrame& tf, const PayloadCommand& delivered,
                   double height_vel, std::span<const Pose> placements,
                   std::span<const Pose> base_offsets) {
    PayloadBody& pl = w.payload;

    Pose root;
    root.orientation = Quat(Eigen::AngleAxisd(tf.yaw, Vec3::UnitZ()));
    root.position = Vec3(tf.position.x(), tf.position.y(), tf.height);
    pl.pose.orientation = root.orientation;
    pl.pose.position = root.position - root.orientation * pl.root_offset_b;

    const Vec3 omega(0.0, 0.0, delivered.omega);
    const Vec3 v_root = root.rotate({delivered.v.x(), delivered.v.y(), 0.0}) +
                        Vec3(0.0, 0.0, height_vel);
    pl.twist.angular = omega;
    pl.twist.linear = v_root + omega.cross(pl.pose.position - root.position);

    const Pose ground = ground_frame(tf);
    const Vec3 v_ground(v_root.x(), v_root.y(), 0.0);
    for (size_t i = 0; i < w.robots.size(); ++i) {
        RobotBody& rb = w.robots[i];
        rb.base_pose = compose(ground, base_offsets[i]);
        rb.base_twist.angular = omega;
        rb.base_twist.linear =
            v_ground + omega.cross(rb.base_pose.position - ground.position);
        rb.base_vel_b = (inverse(rb.base_pose).rotate(rb.base_twist.linear)).head<2>();

        const Pose cf = compose(root, placements[i]);
        rb.pad_pose.orientation = cf.orientation;
        rb.pad_pose.position = cf.position + kOraclePress * cf.rotate(Vec3::UnitX());
        rb.pad_twist.angular = pl.twist.angular;
        rb.pad_twist.linear =
            pl.twist.linear + pl.twist.angular.cross(rb.pad_pose.position - pl.pose.position);
        rb.pad_target_rel = compose(inverse(rb.base_pose), rb.pad_pose);
    }
}

json pose_json(const std::array<double, 7>& a) {
    json j = json::array();
    for (double v : a) j.push_back(v);
    return j;
}

json draw_json(const DomainDraw& d) {
    json j;
    j["friction"] = d.friction;
    j["base_tau"] = d.base_tau;
    j["base_accel"] = d.base_accel;
    json offs = json::array();
    for (const Vec3& o : d.base_offsets) offs.push_back({o.x(), o.y(), o.z()});
    j["base_offsets"] = offs;
    j["obs_noise"] = {{"pos", d.obs_noise.pos_sigma},
                      {"rot", d.obs_noise.rot_sigma},
                      {"twist", d.obs_noise.twist_sigma},
                      {"force", d.obs_noise.force_sigma}};
    j["action_noise_sigma"] = d.action_noise_sigma;
    json pulses = json::array();
    for (const ForcePulse& p : d.pulses)
        pulses.push_back({{"t", p.t_start},
                          {"duration", p.duration},
                          {"force", {p.force.x(), p.force.y(), p.force.z()}}});
    j["pulses"] = pulses;
    return j;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string header_line(const EpisodeRequest& req, const EpisodeSetup& setup) {
    json j;
    j["kind"] = "header";
    j["config_hash"] = hex64(req.config_hash);
    j["seed"] = setup.seed;
    j["episode"] = req.episode_index;
    j["phase"] = int(setup.phase);
    j["episode_length"] = setup.episode_length;
    j["payload_mass"] = setup.scene.payload_mass;
    j["n_robots"] = int(setup.scene.frames.size());
    j["command"] = {setup.command.v.x(), setup.command.v.y(), setup.command.omega,
                    setup.command.height};
    j["obs_mode"] = setup.obs_mode.mode == ObservabilityMode::Mode::cf_plus ? "cf_plus"
                                                                            : "cf_init";
    j["cf_update_hz"] = setup.obs_mode.update_hz;
    j["draw"] = draw_json(setup.draw);
    json frames = json::array();
    for (const ContactFramePlacement& f : setup.scene.frames)
        frames.push_back(pose_json(f.pose_in_payload.serialize()));
    j["frames"] = frames;
    if (!req.config_json.empty()) j["config"] = json::parse(req.config_json);
    return j.dump();
}

std::string outcome_line(const EpisodeResult& r) {
    const EpisodeOutcome& o = r.outcome;
    json j;
    j["kind"] = "outcome";
    j["episode"] = o.episode_index;
    j["seed"] = o.seed;
    j["lin_vel_rmse"] = o.lin_vel_rmse;
    j["ang_vel_rmse"] = o.ang_vel_rmse;
    j["height_rmse"] = o.height_rmse;
    j["dropped"] = o.dropped;
    j["robot_failed"] = o.robot_failed;
    j["mean_normal_force"] = o.mean_normal_force;
    j["mean_return"] = o.mean_return;
    j["ticks"] = r.ticks_run;
    j["diverged"] = r.diverged;
    j["cf_updates_after_2s"] = r.cf_updates_after_2s;
    return j.dump();
}

double payload_tilt(const PayloadBody& pl) {
    const double cz = std::clamp(pl.pose.rotate(Vec3::UnitZ()).z(), -1.0, 1.0);
    return std::acos(cz);
}

std::array<double, 4> cmd_array(const PayloadCommand& c) {
    return {c.v.x(), c.v.y(), c.omega, c.height};
}

}  // namespace

std::string episode_log_name(int episode_index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ep_%06d.jsonl", episode_index);
    return buf;
}

EpisodeResult run_episode(const EpisodeRequest& req) {
    if (req.controller == ControllerKind::learned && req.policy == nullptr)
        throw std::invalid_argument("run_episode: learned controller without parameters");

    EpisodeResult result;
    EpisodeSetup setup = generate_episode(req.gen, req.phase, req.obs_mode, req.seed);
    result.setup = setup;

    World world;
    world.params = setup.params;
    world.state = spawn_scene(setup.scene, setup.params);
    WorldState& w = world.state;
    const int n = int(w.robots.size());
    const size_t un = w.robots.size();
    const double dt = setup.params.control_dt;
    const long n_ticks = std::lround(setup.episode_length / dt);

    Rng rng(derive_seed(req.seed, 0x52554E4Eull));  // sensing/action noise stream

    std::vector<Pose> placements(n);
    std::vector<ContactOffset> offsets(n);
    std::vector<double> frame_yaw(n);
    for (int i = 0; i < n; ++i) {
        placements[i] = setup.scene.frames[size_t(i)].pose_in_payload;
        offsets[i].p = placements[i].position;
        frame_yaw[i] = placements[i].yaw();
    }

    std::vector<Pose> held_cf(n);
    {
        const Pose root0 = payload_root_pose(w.payload);
        for (int i = 0; i < n; ++i) held_cf[i] = compose(root0, placements[i]);
    }

    std::vector<Eigen::VectorXd> prev_action(un,
                                             Eigen::VectorXd::Zero(kActionDim));
    std::vector<ScriptedState> script_state(un);

    // privileged reference mode: payload + robots ride the commanded frame
    const bool oracle = req.controller == ControllerKind::rigid_oracle;
    TargetFrame ref;  // commanded frame the oracle welds to (tracks from spawn)
    std::vector<Pose> oracle_base_off(un);
    if (oracle) {
        w.kinematic_payload = true;
        const Pose root = payload_root_pose(w.payload);
        ref.position = root.position.head<2>();
        ref.yaw = root.yaw();
        ref.height = root.position.z();
        const Pose ground = ground_frame(ref);
        for (int i = 0; i < n; ++i)
            oracle_base_off[size_t(i)] = compose(inverse(ground), w.robots[size_t(i)].base_pose);
    }

    // reward/metrics reference frame, initialized at the lift deadline
    TargetFrame tf;
    bool tf_active = false;
    std::vector<Pose> rigid_off(un);

    RewardWeights weights = req.weights;
    if (!req.phase.leg_motion_penalty_active) weights.leg_motion = 0.0;

    std::vector<Vec2> vel_act, vel_ref;
    std::vector<double> omega_act, omega_ref, h_act, h_ref;
    std::vector<double> fn_sum(un, 0.0);
    long fn_ticks = 0;
    std::vector<double> return_sum(un, 0.0);
    Vec3 prev_vel = w.payload.twist.linear;

    EpisodeLog log = req.log_path.empty() ? EpisodeLog{} : EpisodeLog{req.log_path};
    if (log.enabled()) log.write_header(header_line(req, setup));

    bool dropped = false, failed = false;

    for (long k = 0; k < n_ticks; ++k) {
        const double t = w.t;
        PayloadCommand delivered;  // nothing moves before the shared deadline
        if (t >= kLiftDeadline - kTimeEps) delivered = setup.command;

        Vec3 ext = Vec3::Zero();
        for (const ForcePulse& p : setup.draw.pulses)
            if (t >= p.t_start && t < p.t_start + p.duration) ext += p.force;
        w.external_force = ext;

        const Pose root_now = payload_root_pose(w.payload);
        std::vector<char> fresh(un, 0);
        std::vector<ContactFrameCommand> cf_cmd(un);
        for (int i = 0; i < n; ++i) {
            fresh[size_t(i)] = cf_pose_update_due(setup.obs_mode, t, k) ? 1 : 0;
            if (fresh[size_t(i)]) {
                held_cf[size_t(i)] = compose(root_now, placements[size_t(i)]);
                if (t >= 2.0 - kTimeEps) ++result.cf_updates_after_2s;
            }
            cf_cmd[size_t(i)] = rotate_command_to_frame(
                decompose_command(delivered, offsets[size_t(i)]), frame_yaw[size_t(i)]);
        }

        std::vector<Observation> obs(un);
        for (int i = 0; i < n; ++i)
            obs[size_t(i)] =
                build_observation(w, i, held_cf[size_t(i)], fresh[size_t(i)] != 0,
                                  cf_cmd[size_t(i)], prev_action[size_t(i)],
                                  setup.draw.obs_noise, rng);

        std::vector<Eigen::VectorXd> raw(un);
        for (int i = 0; i < n; ++i) {
            switch (req.controller) {
                case ControllerKind::scripted: {
                    const RobotAction a = scripted_plm_controller(
                        obs[size_t(i)], script_state[size_t(i)], dt, req.scripted);
                    raw[size_t(i)] =
                        encode_action(a, w.robots[size_t(i)].pad_target_rel, ActionBounds{});
                    break;
                }
                case ControllerKind::learned:
                    raw[size_t(i)] = policy_forward(*req.policy, obs[size_t(i)].flatten());
                    break;
                case ControllerKind::rigid_oracle:
                    raw[size_t(i)] = Eigen::VectorXd::Zero(kActionDim);
                    break;
            }
        }
        if (setup.draw.action_noise_sigma > 0.0)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < kActionDim; ++j)
                    raw[size_t(i)](j) += rng.normal(0.0, setup.draw.action_noise_sigma);
        for (auto& a : raw) a = a.cwiseMax(-1.0).cwiseMin(1.0);

        std::vector<RobotAction> actions(un);
        for (int i = 0; i < n; ++i)
            actions[size_t(i)] =
                integrate_action(raw[size_t(i)], w.robots[size_t(i)].pad_target_rel);

        if (oracle) {
            const double h_before = ref.height;
            target_frame_integrate(ref, delivered, dt);
            weld_to_frame(w, ref, delivered, (ref.height - h_before) / dt, placements,
                          oracle_base_off);
        }

        try {
            world.step(actions);
        } catch (const SimulationDiverged&) {
            result.diverged = true;
            dropped = true;
            break;
        }

        if (!tf_active && w.t >= kLiftDeadline - kTimeEps) {
            const Pose root = payload_root_pose(w.payload);
            tf.position = root.position.head<2>();
            tf.yaw = root.yaw();
            tf.height = root.position.z();
            tf_active = true;
            const Pose ground = ground_frame(tf);
            for (int i = 0; i < n; ++i)
                rigid_off[size_t(i)] = compose(inverse(ground), w.robots[size_t(i)].base_pose);
        } else if (tf_active) {
            target_frame_integrate(tf, delivered, dt);
        }

        // ---- rewards (post-step state, gated by the decision time)
        const Pose root_post = payload_root_pose(w.payload);
        RewardContext ctx;
        ctx.schedule = {setup.phase, t};
        ctx.height_actual = root_post.position.z();
        ctx.height_cmd = tf_active ? tf.height : 0.0;
        ctx.omega_actual = w.payload.twist.angular.z();
        ctx.payload_tilt = payload_tilt(w.payload);
        ctx.payload_accel = (w.payload.twist.linear - prev_vel) / dt;
        prev_vel = w.payload.twist.linear;

        Vec2 v_root_tf = Vec2::Zero();
        if (tf_active) {
            const Vec3 v_root =
                w.payload.twist.linear +
                w.payload.twist.angular.cross(root_post.position - w.payload.pose.position);
            const Eigen::Rotation2Dd un_yaw(-tf.yaw);
            v_root_tf = un_yaw * Vec2(v_root.x(), v_root.y());
            ctx.vel_actual = v_root_tf;
            ctx.vel_cmd = delivered.v;
            ctx.omega_cmd = delivered.omega;
        }

        const Pose tf_ground = tf_active ? ground_frame(tf) : Pose{};
        TickRecord rec;
        rec.tick = k;
        rec.t = t;  // decision time: obs, action, cf_new all predate the step
        rec.payload_pose = w.payload.pose.serialize();
        rec.payload_twist = {w.payload.twist.linear.x(),  w.payload.twist.linear.y(),
                             w.payload.twist.linear.z(),  w.payload.twist.angular.x(),
                             w.payload.twist.angular.y(), w.payload.twist.angular.z()};
        rec.root_height = ctx.height_actual;
        rec.command = cmd_array(delivered);
        rec.tf_active = tf_active;
        rec.tf = {tf.position.x(), tf.position.y(), tf.yaw, tf.height};

        const bool post5 = t >= kLiftDeadline - kTimeEps;
        if (post5) ++fn_ticks;

        for (int i = 0; i < n; ++i) {
            const RobotBody& rb = w.robots[size_t(i)];
            RobotRewardInputs in;
            in.pad_pose = rb.pad_pose;
            in.cf_pose = compose(root_post, placements[size_t(i)]);
            in.base_pose = rb.base_pose;
            if (tf_active)
                in.rigid_targets = make_base_constellation(
                    compose(tf_ground, rigid_off[size_t(i)]), AnchorFrame::rigid_target);
            else
                in.rigid_targets.anchor = AnchorFrame::rigid_target;
            in.contact = w.contacts[size_t(i)];
            in.servo_force = rb.servo_force;
            in.servo_force_limit = setup.params.pad.force_limit;
            in.action = raw[size_t(i)];
            in.prev_action = prev_action[size_t(i)];
            in.base_speed = rb.base_twist.linear.head<2>().norm();
            in.base_yaw_rate = rb.base_twist.angular.z();

            const RewardBreakdown rw = total_reward(in, ctx, weights, req.scales);
            return_sum[size_t(i)] += rw.total;

            const double rc = r_contact(in.pad_pose, in.cf_pose);
            result.max_abs_r_contact = std::max(result.max_abs_r_contact, std::abs(rc));
            if (tf_active) {
                const double rt = r_track(in.base_pose, in.rigid_targets);
                result.max_abs_r_track = std::max(result.max_abs_r_track, std::abs(rt));
            }
            if (post5) fn_sum[size_t(i)] += in.contact.normal_force;

            RobotTick rt;
            rt.base_pose = rb.base_pose.serialize();
            rt.pad_pose = rb.pad_pose.serialize();
            rt.normal_force = in.contact.normal_force;
            rt.tangent_force = {in.contact.tangent_force.x(), in.contact.tangent_force.y()};
            rt.in_contact = in.contact.in_contact;
            rt.cf_updated = fresh[size_t(i)] != 0;
            rt.cf_cmd = {cf_cmd[size_t(i)].v.x(), cf_cmd[size_t(i)].v.y(),
                         cf_cmd[size_t(i)].omega, cf_cmd[size_t(i)].height};
            for (int j = 0; j < kActionDim; ++j) rt.action[size_t(j)] = raw[size_t(i)](j);
            rt.reward = rw;
            rec.robots.push_back(std::move(rt));

            prev_action[size_t(i)] = raw[size_t(i)];
        }

        if (post5 && tf_active) {
            vel_act.push_back(v_root_tf);
            vel_ref.push_back(delivered.v);
            omega_act.push_back(ctx.omega_actual);
            omega_ref.push_back(delivered.omega);
            h_act.push_back(ctx.height_actual);
            h_ref.push_back(tf.height);
        }
        if (post5 && req.keep_contacts) result.post5_contacts.push_back(w.contacts);

        if (log.enabled()) log.write_tick(rec);
        result.ticks_run = k + 1;

        dropped = dropped || detect_drop(w, setup.params, tf_active ? tf.height : 0.0);
        failed = failed || detect_robot_failure(w, setup.params);
        if (dropped || failed) break;
    }

    EpisodeOutcome& o = result.outcome;
    o.episode_index = req.episode_index;
    o.seed = req.seed;
    o.dropped = dropped;
    o.robot_failed = failed;
    if (!vel_act.empty()) {
        o.lin_vel_rmse = rms_error(std::span<const Vec2>(vel_act),
                                   std::span<const Vec2>(vel_ref));
        o.ang_vel_rmse = rms_error(std::span<const double>(omega_act),
                                   std::span<const double>(omega_ref));
        o.height_rmse =
            rms_error(std::span<const double>(h_act), std::span<const double>(h_ref));
    }
    o.mean_normal_force.resize(un, 0.0);
    if (fn_ticks > 0)
        for (int i = 0; i < n; ++i)
            o.mean_normal_force[size_t(i)] = fn_sum[size_t(i)] / double(fn_ticks);
    double ret = 0.0;
    for (double v : return_sum) ret += v;
    o.mean_return = n > 0 ? ret / double(n) : 0.0;

    if (log.enabled()) log.write_outcome(outcome_line(result));
    return result;
}

std::vector<EpisodeResult> run_batch(const BatchRequest& req) {
    if (req.episodes < 1) throw std::invalid_argument("run_batch: episodes must be >= 1");
    if (!req.out_dir.empty()) std::filesystem::create_directories(req.out_dir);

    std::vector<EpisodeResult> results(size_t(req.episodes));
    std::vector<std::exception_ptr> errors(size_t(req.episodes));

    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next.fetch_add(1); i < req.episodes; i = next.fetch_add(1)) {
            try {
                EpisodeRequest r = req.base;
                r.seed = derive_seed(req.base.seed, std::uint64_t(i));
                r.episode_index = i;
                if (!req.out_dir.empty())
                    r.log_path = (std::filesystem::path(req.out_dir) /
                                  episode_log_name(i)).string();
                results[size_t(i)] = run_episode(r);
            } catch (...) {
                errors[size_t(i)] = std::current_exception();
            }
        }
    };

    const int threads = std::max(1, std::min(req.workers, req.episodes));
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(size_t(threads));
        for (int i = 0; i < threads; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

EpisodeRequest make_episode_request(const ExperimentConfig& cfg) {
    EpisodeRequest req;
    req.gen = episode_gen_config(cfg);
    req.phase = make_phase_config(cfg.phase);
    req.phase.mass_min = req.phase.mass_max = cfg.scene.payload_mass;
    req.obs_mode = observability_mode(cfg);
    req.controller = controller_kind(cfg.controller);
    req.weights = cfg.weights;
    req.scales = cfg.scales;
    req.seed = cfg.seed;
    req.config_json = config_to_json_text(cfg);
    req.config_hash = config_hash(cfg);
    return req;
}

}  // namespace plm
