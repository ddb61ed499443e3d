#include "plm/log.hpp"

#include <stdexcept>

#include <json.hpp>

namespace plm {

using nlohmann::json;

namespace {

template <size_t N>
json arr(const std::array<double, N>& a) {
    json j = json::array();
    for (double v : a) j.push_back(v);
    return j;
}

template <size_t N>
void read_arr(const json& j, std::array<double, N>& out, const char* what) {
    if (!j.is_array() || j.size() != N)
        throw std::runtime_error(std::string("log: bad array for ") + what);
    for (size_t i = 0; i < N; ++i) out[i] = j[i].get<double>();
}

json reward_json(const RewardBreakdown& r) {
    json j;
    j["contact"] = r.contact_constellation;
    j["track"] = r.base_tracking;
    j["bin"] = r.binary_contact;
    j["height"] = r.height_tracking;
    j["vel"] = r.velocity_tracking;
    j["torque"] = r.torque_joint_motion;
    j["smooth"] = r.action_smoothness;
    j["leg"] = r.leg_motion;
    j["level"] = r.levelness;
    j["acc"] = r.payload_acceleration;
    j["range"] = r.outside_range;
    j["total"] = r.total;
    return j;
}

RewardBreakdown reward_from(const json& j) {
    RewardBreakdown r;
    r.contact_constellation = j.at("contact").get<double>();
    r.base_tracking = j.at("track").get<double>();
    r.binary_contact = j.at("bin").get<double>();
    r.height_tracking = j.at("height").get<double>();
    r.velocity_tracking = j.at("vel").get<double>();
    r.torque_joint_motion = j.at("torque").get<double>();
    r.action_smoothness = j.at("smooth").get<double>();
    r.leg_motion = j.at("leg").get<double>();
    r.levelness = j.at("level").get<double>();
    r.payload_acceleration = j.at("acc").get<double>();
    r.outside_range = j.at("range").get<double>();
    r.total = j.at("total").get<double>();
    return r;
}

}  // namespace

std::string tick_to_jsonl(const TickRecord& r) {
    json j;
    j["kind"] = "tick";
    j["k"] = r.tick;
    j["t"] = r.t;
    j["payload_pose"] = arr(r.payload_pose);
    j["payload_twist"] = arr(r.payload_twist);
    j["root_h"] = r.root_height;
    j["cmd"] = arr(r.command);
    j["tf_active"] = r.tf_active;
    j["tf"] = arr(r.tf);
    json robots = json::array();
    for (const RobotTick& rt : r.robots) {
        json q;
        q["base"] = arr(rt.base_pose);
        q["pad"] = arr(rt.pad_pose);
        q["fn"] = rt.normal_force;
        q["ft"] = arr(rt.tangent_force);
        q["contact"] = rt.in_contact;
        q["cf_new"] = rt.cf_updated;
        q["cf_cmd"] = arr(rt.cf_cmd);
        q["act"] = arr(rt.action);
        q["rw"] = reward_json(rt.reward);
        robots.push_back(q);
    }
    j["robots"] = robots;
    return j.dump();
}

TickRecord tick_from_jsonl(const std::string& line) {
    const json j = json::parse(line);
    TickRecord r;
    r.tick = j.at("k").get<long>();
    r.t = j.at("t").get<double>();
    read_arr(j.at("payload_pose"), r.payload_pose, "payload_pose");
    read_arr(j.at("payload_twist"), r.payload_twist, "payload_twist");
    r.root_height = j.at("root_h").get<double>();
    read_arr(j.at("cmd"), r.command, "cmd");
    r.tf_active = j.at("tf_active").get<bool>();
    read_arr(j.at("tf"), r.tf, "tf");
    for (const json& q : j.at("robots")) {
        RobotTick rt;
        read_arr(q.at("base"), rt.base_pose, "base");
        read_arr(q.at("pad"), rt.pad_pose, "pad");
        rt.normal_force = q.at("fn").get<double>();
        read_arr(q.at("ft"), rt.tangent_force, "ft");
        rt.in_contact = q.at("contact").get<bool>();
        rt.cf_updated = q.at("cf_new").get<bool>();
        read_arr(q.at("cf_cmd"), rt.cf_cmd, "cf_cmd");
        read_arr(q.at("act"), rt.action, "act");
        rt.reward = reward_from(q.at("rw"));
        r.robots.push_back(std::move(rt));
    }
    return r;
}

EpisodeLog::EpisodeLog(const std::string& path) : file_(path, std::ios::trunc) {
    if (!file_) throw std::runtime_error("log: cannot open " + path);
}

void EpisodeLog::write_header(const std::string& json_text) {
    if (file_.is_open()) file_ << json_text << '\n';
}

void EpisodeLog::write_tick(const TickRecord& r) {
    if (file_.is_open()) file_ << tick_to_jsonl(r) << '\n';
}

void EpisodeLog::write_outcome(const std::string& json_text) {
    if (file_.is_open()) {
        file_ << json_text << '\n';
        file_.flush();
    }
}

LogFile read_log(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("log: cannot open " + path);
    LogFile out;
    std::string line;
    long line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error("log: parse error at line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
        const std::string kind = j.value("kind", "");
        try {
            if (kind == "header")
                out.header_json = line;
            else if (kind == "outcome")
                out.outcome_json = line;
            else if (kind == "tick")
                out.ticks.push_back(tick_from_jsonl(line));
            else
                throw std::runtime_error("unknown record kind '" + kind + "'");
        } catch (const std::exception& e) {
            throw std::runtime_error("log: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (out.header_json.empty())
        throw std::runtime_error("log: missing header record in " + path);
    return out;
}

}  // namespace plm
