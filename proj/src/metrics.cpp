#include "plm/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace plm {

namespace {

double rms_from_sq(double sum_sq, size_t n) { return std::sqrt(sum_sq / double(n)); }

struct Running {
    double sum = 0.0, sum_sq = 0.0;
    int n = 0;
    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++n;
    }
    double mean() const { return n > 0 ? sum / n : 0.0; }
    double se() const {
        if (n < 2) return 0.0;
        const double var = (sum_sq - sum * sum / n) / double(n - 1);
        return std::sqrt(std::max(0.0, var) / double(n));
    }
};

}  // namespace

double rms_error(std::span<const double> actual, std::span<const double> commanded) {
    if (actual.empty() || actual.size() != commanded.size())
        throw std::invalid_argument("rms_error: empty or mismatched series");
    double acc = 0.0;
    for (size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i] - commanded[i];
        acc += e * e;
    }
    return rms_from_sq(acc, actual.size());
}

double rms_error(std::span<const Vec2> actual, std::span<const Vec2> commanded) {
    if (actual.empty() || actual.size() != commanded.size())
        throw std::invalid_argument("rms_error: empty or mismatched series");
    double acc = 0.0;
    for (size_t i = 0; i < actual.size(); ++i) acc += (actual[i] - commanded[i]).squaredNorm();
    return rms_from_sq(acc, actual.size());
}

BatchSummary summarize_batch(std::span<const EpisodeOutcome> outcomes) {
    if (outcomes.empty()) throw std::invalid_argument("summarize_batch: no outcomes");
    BatchSummary s;
    s.episodes = int(outcomes.size());
    Running lin, ang, hgt, ret;
    for (const EpisodeOutcome& o : outcomes) {
        if (o.dropped) ++s.drop_count;
        if (o.robot_failed) ++s.failure_count;
        ret.add(o.mean_return);
        if (!o.dropped) {
            lin.add(o.lin_vel_rmse);
            ang.add(o.ang_vel_rmse);
            hgt.add(o.height_rmse);
        }
    }
    s.drop_pct = 100.0 * double(s.drop_count) / double(s.episodes);
    s.failure_pct = 100.0 * double(s.failure_count) / double(s.episodes);
    s.tracked_episodes = lin.n;
    s.lin_vel_mean = lin.mean();
    s.lin_vel_se = lin.se();
    s.ang_vel_mean = ang.mean();
    s.ang_vel_se = ang.se();
    s.height_mean = hgt.mean();
    s.height_se = hgt.se();
    s.mean_return = ret.mean();
    return s;
}

ForceDistribution force_distribution(std::span<const std::vector<ContactRecord>> ticks,
                                     std::span<const int> side_of_robot, int n_robots) {
    ForceDistribution fd;
    fd.per_robot = contact_wrench_summary(ticks, n_robots);
    for (int r = 0; r < n_robots; ++r) {
        const int side = r < int(side_of_robot.size()) ? side_of_robot[r] : -1;
        if (side == 0) fd.side_a_total += fd.per_robot[std::size_t(r)];
        if (side == 1) fd.side_b_total += fd.per_robot[std::size_t(r)];
    }
    const double mx = std::max(fd.side_a_total, fd.side_b_total);
    if (fd.side_a_total > 0.0 && fd.side_b_total > 0.0 && mx > 0.0)
        fd.balance = std::abs(fd.side_a_total - fd.side_b_total) / mx;
    return fd;
}

std::string outcome_csv_header() {
    return "episode,seed,lin_vel_rmse,ang_vel_rmse,height_rmse,dropped,robot_failed,"
           "mean_return,mean_normal_forces";
}

std::string outcome_csv_row(const EpisodeOutcome& o) {
    std::ostringstream ss;
    ss.precision(17);
    ss << o.episode_index << ',' << o.seed << ',' << o.lin_vel_rmse << ',' << o.ang_vel_rmse
       << ',' << o.height_rmse << ',' << (o.dropped ? 1 : 0) << ',' << (o.robot_failed ? 1 : 0)
       << ',' << o.mean_return << ',';
    for (size_t i = 0; i < o.mean_normal_force.size(); ++i) {
        if (i) ss << ';';
        ss << o.mean_normal_force[i];
    }
    return ss.str();
}

std::string summary_csv(const BatchSummary& s, std::uint64_t config_hash,
                        std::uint64_t seed) {
    std::ostringstream ss;
    ss.precision(17);
    ss << "episodes,tracked,drop_pct,failure_pct,lin_vel_mean,lin_vel_se,ang_vel_mean,"
          "ang_vel_se,height_mean,height_se,mean_return,config_hash,seed\n";
    ss << s.episodes << ',' << s.tracked_episodes << ',' << s.drop_pct << ','
       << s.failure_pct << ',' << s.lin_vel_mean << ',' << s.lin_vel_se << ','
       << s.ang_vel_mean << ',' << s.ang_vel_se << ',' << s.height_mean << ','
       << s.height_se << ',' << s.mean_return << ',' << std::hex << config_hash << std::dec
       << ',' << seed << '\n';
    return ss.str();
}

}  // namespace plm
