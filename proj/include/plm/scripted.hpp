#pragma once

#include <Eigen/Dense>

#include "plm/geometry.hpp"
#include "plm/policy.hpp"
#include "plm/world.hpp"

namespace plm {

// Hand-tuned pinch-lift-move behavior driven ONLY by the per-robot
// Observation: approach the contact frame, ramp a squeeze, then dead-reckon a
// virtual contact-frame target from the commanded twist and drive pad + base
// to follow it. Fresh contact-frame fixes (cf_fresh) pull the virtual target
// back toward the estimate; stale fixes are ignored, so the controller keeps
// working when the pose channel is masked.
struct ScriptedParams {
    double approach_time = 2.5;  // s: gap closed linearly to touch by here
    double press_start = 2.5;
    double press_full = 4.0;     // squeeze fully ramped by here
    double press_depth = 0.0185; // m of setpoint past the surface (~30 N squeeze)
    double approach_gap = 0.10;  // m initial pad standoff from the surface
    double ramp_time = 0.1;      // s soft-start for move commands after t = 5
    double height_rate = 0.25;   // m/s target height slew
    double kp_pos = 1.5;         // 1/s base station-keeping gain
    double kp_yaw = 1.2;
    double fix_gain = 0.25;      // blend toward a fresh cf fix
    double fix_step = 0.02;      // m max correction per fix (0.05 rad rotational)
    double press_force = 33.0;   // N squeeze setpoint for the depth regulator
    double force_gain = 1e-3;    // m/(N*s) integral gain on measured squeeze
    double rot_clearance = 0.08; // m extra base standoff at full rotation command
};

struct ScriptedState {
    double time = 0.0;          // integrated from dt; local to this robot
    bool home_set = false;
    double home_forward = 0.0;  // commissioning distance to the cf at start
    bool move_init = false;
    Pose virtual_cf_b;          // dead-reckoned contact-frame target, base frame
    double press_adj = 0.0;     // integral trim on press depth, move stage only
};

RobotAction scripted_plm_controller(const Observation& obs, ScriptedState& st, double dt,
                                    const ScriptedParams& p = {},
                                    const ActionBounds& bounds = {});

}  // namespace plm
