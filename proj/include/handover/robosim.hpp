#pragma once
// Kinematic handover simulator: a Cartesian point end-effector receives a cup
// from a simulated human, transports it (to the bucket for pouring when full),
// and releases it at the drawer. Two controller conditions: a neutral
// proportional law with constant cruise speed, and an expressive condition
// that plays back per-class velocity profiles.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "handover/behavior.hpp"
#include "handover/classifier.hpp"
#include "handover/core.hpp"
#include "handover/synth.hpp"

namespace handover {

// ---------------------------------------------------------------------------
// Types.
// ---------------------------------------------------------------------------

struct EndEffectorState {
  Vec3 pos;
  Vec3 vel;
  double t = 0.0;
};

inline constexpr double kSpeedCap = 1.5;  // m/s, applied to commands before integration

// Sampled speed profile played back over a segment; must start and end at
// (numerically) zero speed.
struct VelocityProfile {
  double dt = 1.0 / 40.0;
  std::vector<double> v;

  void validate() const {
    if (v.size() < 2) throw invalid_argument_error("profile: need at least 2 samples");
    if (!(dt > 0.0)) throw invalid_argument_error("profile: dt must be positive");
    if (std::abs(v.front()) > 1e-6 || std::abs(v.back()) > 1e-6) {
      throw validation_error("profile: must start and end at zero speed");
    }
    for (double s : v) {
      if (!(s >= 0.0)) throw validation_error("profile: speeds must be non-negative");
    }
  }

  double integral() const {
    double a = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) a += 0.5 * (v[i] + v[i - 1]) * dt;
    return a;
  }

  double duration() const { return static_cast<double>(v.size() - 1) * dt; }

  // Linear interpolation; zero outside [0, duration].
  double at(double t) const {
    if (t <= 0.0 || t >= duration()) return 0.0;
    double pos = t / dt;
    std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    double frac = pos - static_cast<double>(i);
    return v[i] + frac * (v[i + 1] - v[i]);
  }
};

struct NeutralSpec {
  double k_p = 8.0;        // 1/s proportional gain
  double v_const = 0.25;   // m/s cruise speed, intermediate between the profiles
  // Speed-up rate limit applied by the executive to this controller's
  // commands (the raw law steps 0 -> v_const in one tick, which no physical
  // velocity interface executes). Slow-downs are not limited: the
  // proportional law decelerates at most k_p * v_const on its own.
  double accel_ramp = 1.2;  // m/s^2
};

struct ExpressiveSpec {
  VelocityProfile careful;
  VelocityProfile not_careful;
};

// Defaults calibrated so the careful profile's peak sits in the careful band
// (~0.19 m/s) and the not-careful peak matches brisk human transport.
inline ExpressiveSpec default_expressive_spec() {
  ExpressiveSpec s;
  s.careful = VelocityProfile{1.0 / 40.0, min_jerk_profile(0.5, 5.0, 1.0 / 40.0)};
  s.not_careful = VelocityProfile{1.0 / 40.0, min_jerk_profile(0.5, 0.85, 1.0 / 40.0)};
  return s;
}

using ControllerSpec = std::variant<NeutralSpec, ExpressiveSpec>;

struct TaskGeometry {
  Vec3 handover{0.0, 0.0, 0.0};
  Vec3 bucket{0.5, 0.0, 0.0};
  Vec3 drawer{0.53, 0.599, 0.0};  // ~0.6 m from the bucket, ~0.8 m from the handover
  double grasp_trigger = 0.05;    // m wrist-gripper distance that triggers the grasp
  double arrive_tol = 1e-3;       // m: the neutral law parks inside this
  double pour_dwell = 2.0;        // s stationary pour at the bucket
  double timeout = 10.0;          // s to wait for the human before giving up
  double dt = 1.0 / 40.0;         // simulation tick
  double spill_accel = 2.5;       // m/s^2 finite-difference bound while holding a full cup
};

// Task frame translated so the handover zone sits at `handover` (e.g. where
// a given human trial actually came to rest); leg lengths preserved.
inline TaskGeometry geometry_at(Vec3 handover, TaskGeometry base = {}) {
  Vec3 shift = handover - base.handover;
  base.handover = handover;
  base.bucket = base.bucket + shift;
  base.drawer = base.drawer + shift;
  return base;
}

struct TrialMetrics {
  Cup cup = Cup::Empty;
  std::string condition;      // "neu" | "exp"
  double wait_time = 0.0;     // s from trial start to grasp (human side)
  double busy_time = 0.0;     // s from grasp to release (robot side)
  double total_time = 0.0;    // wait + busy
  bool spill = false;         // only possible while holding a full cup
  std::optional<Label> classifier_decision;  // diagnostic, attached classifier
  std::optional<double> classifier_decision_time;
};

struct BlockMetrics {
  std::vector<TrialMetrics> trials;
  double total_time = 0.0;       // full block duration
  double robot_busy_total = 0.0; // sum of per-trial busy times
  double net_human_time = 0.0;   // total - robot busy (identity, exact)
  int spills = 0;
};

// ---------------------------------------------------------------------------
// Pure ops.
// ---------------------------------------------------------------------------

// Proportional velocity command toward the target, cruise-limited; exact
// zero inside the arrival tolerance.
inline Vec3 neutral_command(Vec3 pos, Vec3 target, const NeutralSpec& spec,
                            double arrive_tol = 1e-3) {
  Vec3 delta = target - pos;
  double dist = norm(delta);
  if (dist < arrive_tol) return {0.0, 0.0, 0.0};
  double mag = std::min(spec.k_p * dist, spec.v_const);
  return (mag / dist) * delta;
}

// One Euler tick: the command is speed-capped, then integrated.
inline EndEffectorState step_end_effector(const EndEffectorState& s, Vec3 cmd, double dt) {
  double speed = norm(cmd);
  if (speed > kSpeedCap) cmd = (kSpeedCap / speed) * cmd;
  EndEffectorState out;
  out.vel = cmd;
  out.pos = s.pos + dt * cmd;
  out.t = s.t + dt;
  return out;
}

// Spill proxy: true iff the finite-difference acceleration norm between
// consecutive trace states exceeds a_max at any step where a full cup is
// held. `holding_full[i]` flags the later state of each pair.
inline bool check_spill(const std::vector<EndEffectorState>& trace,
                        const std::vector<bool>& holding_full, double a_max = 2.5) {
  if (trace.size() != holding_full.size()) {
    throw invalid_argument_error("check_spill: trace/flag length mismatch");
  }
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (!holding_full[i]) continue;
    double dt = trace[i].t - trace[i - 1].t;
    if (!(dt > 0.0)) throw invalid_argument_error("check_spill: non-increasing trace time");
    double a = norm(trace[i].vel - trace[i - 1].vel) / dt;
    if (a > a_max) return true;
  }
  return false;
}

// Whole-trace convenience: a full cup is held throughout; an empty cup can
// never spill.
inline bool check_spill(const std::vector<EndEffectorState>& trace, Cup cup, double a_max = 2.5) {
  if (cup != Cup::Full) return false;
  return check_spill(trace, std::vector<bool>(trace.size(), true), a_max);
}

// ---------------------------------------------------------------------------
// Trial execution.
// ---------------------------------------------------------------------------

struct TrialSetup {
  Cup cup = Cup::Empty;
  ControllerSpec controller = NeutralSpec{};
  TaskGeometry geometry;
  // Human wrist stream delivering the cup (120 Hz synth trial or recorded).
  Trajectory human;
  // Optional online classifier running on the human transport stream;
  // diagnostic only — the executed profile is conditioned on ground truth.
  const ModelPair* models = nullptr;
  ClassifierConfig classifier_cfg;
};

struct TrialLog {
  TrialMetrics metrics;
  std::vector<EndEffectorState> trace;
  std::vector<bool> holding_full;
};

namespace detail {

// Drive the end effector along a straight segment with a time-rescaled
// profile: the raw profile's time axis is scaled once so its displacement
// integral equals the segment length (peak speed preserved, duration scales).
inline void play_profile_segment(TrialLog& log, EndEffectorState& s, Vec3 target,
                                 const VelocityProfile& profile, bool full, double dt) {
  profile.validate();
  Vec3 delta = target - s.pos;
  double length = norm(delta);
  if (length <= 1e-12) throw invalid_argument_error("expressive segment: zero-length path");
  Vec3 dir = (1.0 / length) * delta;
  double raw = profile.integral();
  if (raw <= 0.0) throw validation_error("expressive segment: profile has zero displacement");
  double scale = raw / length;              // playback time axis: v(t * scale)
  double duration = profile.duration() / scale;
  double t_local = 0.0;
  while (t_local < duration) {
    t_local += dt;
    double speed = profile.at(t_local * scale);
    s = step_end_effector(s, speed * dir, dt);
    log.trace.push_back(s);
    log.holding_full.push_back(full);
  }
  // Command goes to zero after the profile ends.
  s = step_end_effector(s, {0.0, 0.0, 0.0}, dt);
  log.trace.push_back(s);
  log.holding_full.push_back(full);
}

// Drive with the neutral law until arrival (distance < tolerance). The
// executive rate-limits speed-ups; see NeutralSpec::accel_ramp.
inline void run_neutral_segment(TrialLog& log, EndEffectorState& s, Vec3 target,
                                const NeutralSpec& spec, bool full, const TaskGeometry& geo) {
  double guard = 0.0;
  while (distance(s.pos, target) >= geo.arrive_tol) {
    Vec3 cmd = neutral_command(s.pos, target, spec, geo.arrive_tol);
    double want = norm(cmd);
    double have = norm(s.vel);
    double max_up = have + spec.accel_ramp * geo.dt;
    if (want > max_up && want > 0.0) cmd = (max_up / want) * cmd;
    s = step_end_effector(s, cmd, geo.dt);
    log.trace.push_back(s);
    log.holding_full.push_back(full);
    guard += geo.dt;
    if (guard > 120.0) throw error("neutral segment failed to converge");
  }
  s.vel = {0.0, 0.0, 0.0};
}

inline void dwell(TrialLog& log, EndEffectorState& s, double seconds, bool full, double dt) {
  std::size_t n = static_cast<std::size_t>(std::llround(seconds / dt));
  for (std::size_t i = 0; i < n; ++i) {
    s = step_end_effector(s, {0.0, 0.0, 0.0}, dt);
    log.trace.push_back(s);
    log.holding_full.push_back(full);
  }
}

}  // namespace detail

// Run one handover trial through the state machine:
// WaitingHuman -> Grasp -> Transport (pour at the bucket when full) -> Release.
inline TrialLog run_trial(const TrialSetup& setup) {
  const TaskGeometry& geo = setup.geometry;
  TrialLog log;
  TrialMetrics& m = log.metrics;
  m.cup = setup.cup;
  m.condition = std::holds_alternative<NeutralSpec>(setup.controller) ? "neu" : "exp";

  // Robot waits pre-positioned at the handover zone.
  EndEffectorState s;
  s.pos = geo.handover;
  log.trace.push_back(s);
  log.holding_full.push_back(false);

  // WaitingHuman: play the human stream until the wrist comes within the
  // grasp trigger of the gripper.
  if (setup.human.size() < 1) throw invalid_argument_error("run_trial: empty human stream");
  std::optional<double> grasp_time;
  for (std::size_t i = 0; i < setup.human.size(); ++i) {
    if (setup.human.t[i] > geo.timeout) break;
    if (distance(setup.human.p[i], s.pos) < geo.grasp_trigger) {
      grasp_time = setup.human.t[i];
      break;
    }
  }
  if (!grasp_time) {
    throw timeout_error("run_trial: human never entered the handover zone within " +
                        format_double(geo.timeout) + " s");
  }
  m.wait_time = *grasp_time;

  // Diagnostic classifier on the human transport stream.
  if (setup.models) {
    PhaseStream stream = extract_phase_stream(setup.human, MotionPhase::Transport);
    OnlineResult r = classify_online(stream.dist, *setup.models, setup.classifier_cfg);
    if (r.decision) {
      m.classifier_decision = r.decision->label;
      m.classifier_decision_time = r.decision->time;
    }
  }

  // Grasp: instantaneous transfer; robot business starts here.
  s.t = *grasp_time;
  log.trace.back().t = s.t;  // the wait is human time, not robot motion
  const bool full = setup.cup == Cup::Full;
  double busy_start = s.t;

  auto drive = [&](Vec3 target, bool careful_segment, bool holding_full_cup) {
    if (const auto* neu = std::get_if<NeutralSpec>(&setup.controller)) {
      detail::run_neutral_segment(log, s, target, *neu, holding_full_cup, geo);
    } else {
      const auto& exp = std::get<ExpressiveSpec>(setup.controller);
      detail::play_profile_segment(log, s, target,
                                   careful_segment ? exp.careful : exp.not_careful,
                                   holding_full_cup, geo.dt);
    }
  };

  if (full) {
    // Full cup: careful transport to the bucket, pour, then the emptied cup
    // goes to the drawer without the careful constraint.
    drive(geo.bucket, /*careful_segment=*/true, /*holding_full_cup=*/true);
    detail::dwell(log, s, geo.pour_dwell, /*full=*/true, geo.dt);  // pour: cup empties after
    drive(geo.drawer, /*careful_segment=*/false, /*holding_full_cup=*/false);
  } else {
    drive(geo.drawer, /*careful_segment=*/false, /*holding_full_cup=*/false);
  }
  // Release: instantaneous at the drawer.
  m.busy_time = s.t - busy_start;
  m.total_time = m.wait_time + m.busy_time;
  m.spill = full && check_spill(log.trace, log.holding_full, geo.spill_accel);
  return log;
}

// ---------------------------------------------------------------------------
// Blocks.
// ---------------------------------------------------------------------------

struct BlockSetup {
  std::vector<TrialSetup> trials;     // exactly 4, balanced 2 Full + 2 Empty
  double inter_trial_latency = 1.0;   // s of human time between trials
};

inline BlockMetrics run_block(const BlockSetup& block) {
  if (block.trials.size() != 4) {
    throw invalid_argument_error("run_block: a block is exactly 4 trials");
  }
  int fulls = 0;
  for (const auto& t : block.trials) fulls += t.cup == Cup::Full ? 1 : 0;
  if (fulls != 2) {
    throw invalid_argument_error("run_block: block must balance 2 full + 2 empty cups");
  }
  BlockMetrics bm;
  for (std::size_t i = 0; i < block.trials.size(); ++i) {
    TrialLog log = run_trial(block.trials[i]);
    bm.spills += log.metrics.spill ? 1 : 0;
    bm.total_time += log.metrics.total_time;
    if (i + 1 < block.trials.size()) bm.total_time += block.inter_trial_latency;
    bm.robot_busy_total += log.metrics.busy_time;
    bm.trials.push_back(std::move(log.metrics));
  }
  bm.net_human_time = bm.total_time - bm.robot_busy_total;
  return bm;
}

// Net human time from already-aggregated logs (the identity the block
// metrics obey by construction).
inline double net_human_time(double total, const std::vector<double>& busy_times) {
  double busy = 0.0;
  for (double b : busy_times) busy += b;
  double net = total - busy;
  if (net < 0.0) throw validation_error("net human time is negative: busy exceeds total");
  return net;
}

}  // namespace handover
