#pragma once

#include <array>
#include <fstream>
#include <string>
#include <vector>

#include "plm/rewards.hpp"

namespace plm {

// One robot's slice of a control tick.
struct RobotTick {
    std::array<double, 7> base_pose{};  // [x y z qw qx qy qz]
    std::array<double, 7> pad_pose{};
    double normal_force = 0.0;
    std::array<double, 2> tangent_force{};
    bool in_contact = false;
    bool cf_updated = false;            // observability: pose channel refreshed
    std::array<double, 4> cf_cmd{};     // v.x v.y omega height
    std::array<double, 9> action{};
    RewardBreakdown reward;
};

struct TickRecord {
    long tick = 0;
    double t = 0.0;
    std::array<double, 7> payload_pose{};
    std::array<double, 6> payload_twist{};
    double root_height = 0.0;
    std::array<double, 4> command{};    // delivered team command (zeros before t=5)
    bool tf_active = false;
    std::array<double, 4> tf{};         // target frame: x y yaw height
    std::vector<RobotTick> robots;
};

std::string tick_to_jsonl(const TickRecord& r);
TickRecord tick_from_jsonl(const std::string& line);  // throws std::runtime_error

// Line-oriented episode log: one header line, one line per tick, one outcome
// line. A default-constructed logger discards everything.
class EpisodeLog {
  public:
    EpisodeLog() = default;
    explicit EpisodeLog(const std::string& path);
    bool enabled() const { return file_.is_open(); }
    void write_header(const std::string& json_text);
    void write_tick(const TickRecord& r);
    void write_outcome(const std::string& json_text);

  private:
    std::ofstream file_;
};

struct LogFile {
    std::string header_json;
    std::vector<TickRecord> ticks;
    std::string outcome_json;
};

// Parses a full episode log; malformed lines raise std::runtime_error with
// the 1-based line number.
LogFile read_log(const std::string& path);

}  // namespace plm
