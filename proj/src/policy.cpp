#include "plm/policy.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace plm {

Eigen::VectorXd Observation::flatten() const {
    Eigen::VectorXd v(kObservationDim);
    int i = 0;
    v.segment<3>(i) = base_twist.linear; i += 3;
    v.segment<3>(i) = base_twist.angular; i += 3;
    v(i++) = base_height;
    auto put_pose = [&](const Pose& p) {
        const auto s = p.serialize();
        for (double x : s) v(i++) = x;
    };
    put_pose(pad_pose_b);
    put_pose(pad_target_b);
    v.segment<3>(i) = servo_force_b / 60.0; i += 3;
    put_pose(cf_pose_b);
    v(i++) = cf_fresh ? 1.0 : 0.0;
    v(i++) = cf_cmd.v.x();
    v(i++) = cf_cmd.v.y();
    v(i++) = cf_cmd.omega;
    v(i++) = cf_cmd.height;
    v(i++) = t_sync;
    if (prev_action.size() != kActionDim)
        throw std::invalid_argument("Observation::flatten: prev_action size");
    v.segment(i, kActionDim) = prev_action; i += kActionDim;
    if (i != kObservationDim) throw std::logic_error("Observation::flatten: layout mismatch");
    return v;
}

namespace {

Vec3 noise_vec(Rng& rng, double sigma) {
    if (sigma <= 0.0) return Vec3::Zero();
    return {rng.normal_clamped(0.0, sigma), rng.normal_clamped(0.0, sigma),
            rng.normal_clamped(0.0, sigma)};
}

Pose noisy_pose(const Pose& p, double pos_sigma, double rot_sigma, Rng& rng) {
    Pose out = p;
    out.position += noise_vec(rng, pos_sigma);
    if (rot_sigma > 0.0)
        out.orientation = (quat_exp(noise_vec(rng, rot_sigma)) * out.orientation).normalized();
    return out;
}

}  // namespace

Observation build_observation(const WorldState& w, int robot, const Pose& held_cf_world,
                              bool cf_fresh, const ContactFrameCommand& cmd,
                              const Eigen::VectorXd& prev_action, const ObsNoise& noise,
                              Rng& rng) {
    if (robot < 0 || robot >= int(w.robots.size()))
        throw std::invalid_argument("build_observation: no such robot");
    const RobotBody& rb = w.robots[robot];
    const Pose base_inv = inverse(rb.base_pose);

    Observation o;
    o.base_twist.linear =
        base_inv.rotate(rb.base_twist.linear) + noise_vec(rng, noise.twist_sigma);
    o.base_twist.angular =
        base_inv.rotate(rb.base_twist.angular) + noise_vec(rng, noise.twist_sigma);
    o.base_height = rb.base_pose.position.z();
    o.pad_pose_b = noisy_pose(compose(base_inv, rb.pad_pose), noise.pos_sigma,
                              noise.rot_sigma, rng);
    o.pad_target_b = rb.pad_target_rel;  // own setpoint, no sensing noise
    o.servo_force_b = base_inv.rotate(rb.servo_force) + noise_vec(rng, noise.force_sigma);
    o.cf_pose_b = noisy_pose(compose(base_inv, held_cf_world), noise.pos_sigma,
                             noise.rot_sigma, rng);
    o.cf_fresh = cf_fresh;
    o.cf_cmd = cmd;
    o.t_sync = sync_signal(w.t);
    o.prev_action = prev_action.size() == kActionDim
                        ? prev_action
                        : Eigen::VectorXd::Zero(kActionDim);
    return o;
}

RobotAction integrate_action(const Eigen::VectorXd& raw, const Pose& current_target_rel,
                             const ActionBounds& bounds) {
    if (raw.size() != kActionDim)
        throw std::invalid_argument("integrate_action: action dimension mismatch");
    Eigen::VectorXd a = raw.cwiseMax(-1.0).cwiseMin(1.0);

    RobotAction act;
    act.pad_target_rel = current_target_rel;
    act.pad_target_rel.position += a.head<3>() * bounds.pad_pos_delta;
    const Vec3 rotvec = a.segment<3>(3) * bounds.pad_rot_delta;
    act.pad_target_rel.orientation =
        (quat_exp(rotvec) * current_target_rel.orientation).normalized();
    act.base_v = Vec2(a(6), a(7)) * bounds.base_v;
    act.base_omega = a(8) * bounds.base_omega;
    return act;
}

// ---------------------------------------------------------------------------
// network

int PolicyParams::param_count(const PolicyConfig& c) {
    return c.hidden * c.obs_dim + c.hidden + c.hidden * c.hidden + c.hidden +
           c.action_dim * c.hidden + c.action_dim;
}

PolicyParams PolicyParams::zeros(const PolicyConfig& cfg) {
    return {cfg, Eigen::VectorXd::Zero(param_count(cfg))};
}

PolicyParams PolicyParams::random_init(const PolicyConfig& cfg, Rng& rng, double scale) {
    PolicyParams p = zeros(cfg);
    // layer-wise fan-in scaling, biases zero
    int off = 0;
    auto fill = [&](int rows, int cols) {
        const double s = scale / std::sqrt(double(cols));
        for (int i = 0; i < rows * cols; ++i) p.theta(off++) = rng.normal(0.0, s);
        off += rows;  // biases stay zero
    };
    fill(cfg.hidden, cfg.obs_dim);
    fill(cfg.hidden, cfg.hidden);
    fill(cfg.action_dim, cfg.hidden);
    return p;
}

Eigen::VectorXd policy_forward(const PolicyParams& p, const Eigen::VectorXd& obs) {
    const PolicyConfig& c = p.cfg;
    if (obs.size() != c.obs_dim || p.theta.size() != PolicyParams::param_count(c))
        throw std::invalid_argument("policy_forward: dimension mismatch");

    const double* t = p.theta.data();
    using CMat = Eigen::Map<const Eigen::MatrixXd>;
    using CVec = Eigen::Map<const Eigen::VectorXd>;
    const CMat w1(t, c.hidden, c.obs_dim);
    const CVec b1(t + c.hidden * c.obs_dim, c.hidden);
    const double* t2 = t + c.hidden * c.obs_dim + c.hidden;
    const CMat w2(t2, c.hidden, c.hidden);
    const CVec b2(t2 + c.hidden * c.hidden, c.hidden);
    const double* t3 = t2 + c.hidden * c.hidden + c.hidden;
    const CMat w3(t3, c.action_dim, c.hidden);
    const CVec b3(t3 + c.action_dim * c.hidden, c.action_dim);

    const Eigen::VectorXd h1 = ((w1 * obs + b1).array().tanh()).matrix();
    const Eigen::VectorXd h2 = ((w2 * h1 + b2).array().tanh()).matrix();
    return ((w3 * h2 + b3).array().tanh()).matrix();
}

// ---------------------------------------------------------------------------
// serialization

namespace {
constexpr std::uint32_t kParamsMagic = 0x504c4d50u;  // "PLMP"
constexpr std::uint32_t kParamsFileVersion = 1;

struct ParamsFileHeader {
    std::uint32_t magic;
    std::uint32_t file_version;
    std::uint32_t obs_dim;
    std::uint32_t hidden;
    std::uint32_t action_dim;
    std::uint32_t obs_layout_version;
    std::uint64_t seed;
    std::uint64_t iteration;
    std::uint64_t param_count;
};
}  // namespace

void save_params(const std::string& path, const PolicyParams& p, std::uint64_t seed,
                 std::uint64_t iteration) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_params: cannot open " + path);
    ParamsFileHeader h{kParamsMagic, kParamsFileVersion, std::uint32_t(p.cfg.obs_dim),
                       std::uint32_t(p.cfg.hidden), std::uint32_t(p.cfg.action_dim),
                       std::uint32_t(kObservationVersion), seed, iteration,
                       std::uint64_t(p.theta.size())};
    f.write(reinterpret_cast<const char*>(&h), sizeof h);
    f.write(reinterpret_cast<const char*>(p.theta.data()),
            std::streamsize(sizeof(double) * std::size_t(p.theta.size())));
    if (!f) throw std::runtime_error("save_params: write failed for " + path);
}

PolicyParams load_params(const std::string& path, std::uint64_t* seed,
                         std::uint64_t* iteration) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_params: cannot open " + path);
    ParamsFileHeader h{};
    f.read(reinterpret_cast<char*>(&h), sizeof h);
    if (!f || h.magic != kParamsMagic || h.file_version != kParamsFileVersion)
        throw std::runtime_error("load_params: not a parameter file: " + path);

    PolicyConfig cfg{int(h.obs_dim), int(h.hidden), int(h.action_dim)};
    if (h.param_count != std::uint64_t(PolicyParams::param_count(cfg)))
        throw std::runtime_error("load_params: corrupt header (parameter count) in " + path);
    if (h.obs_layout_version != std::uint32_t(kObservationVersion))
        throw std::runtime_error("load_params: observation layout version mismatch in " + path);

    PolicyParams p{cfg, Eigen::VectorXd(Eigen::Index(h.param_count))};
    f.read(reinterpret_cast<char*>(p.theta.data()),
           std::streamsize(sizeof(double) * std::size_t(h.param_count)));
    if (!f) throw std::runtime_error("load_params: truncated file: " + path);
    if (seed) *seed = h.seed;
    if (iteration) *iteration = h.iteration;
    return p;
}

}  // namespace plm
