#pragma once
// Synthetic handover-trial generator. Each trial is a 120 Hz wrist
// trajectory: pre-dwell, min-jerk reach to the cup, grasp dwell, transport
// to the handover point, and a terminal hold. The transport speed profile is
// a half min-jerk rise blended into an exponential settle xdot = -k x
// (x = distance to the attractor), which gives each class a well-defined
// phase-space slope -k while the rise absorbs the duration variance.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "handover/core.hpp"

namespace handover {

// ---------------------------------------------------------------------------
// Minimum-jerk primitives.
// ---------------------------------------------------------------------------

// Straight-line minimum-jerk speed at time t for displacement d over
// duration T: v(t) = 30 d / T * (u^2 - 2 u^3 + u^4), u = t/T.
// Peak 1.875 d/T at u = 1/2; integral over [0, T] equals d;
// peak acceleration 10 d / (sqrt(3) T^2).
inline double min_jerk_speed(double d, double T, double t) {
  if (!(T > 0.0)) throw invalid_argument_error("min_jerk: T must be positive");
  if (t <= 0.0 || t >= T) return 0.0;
  double u = t / T;
  double u2 = u * u;
  return 30.0 * d / T * (u2 - 2.0 * u2 * u + u2 * u2);
}

// Sampled min-jerk speed profile at rate 1/dt, covering [0, T] inclusive of
// the final (zero) sample.
inline std::vector<double> min_jerk_profile(double d, double T, double dt) {
  if (!(T > 0.0) || !(dt > 0.0)) throw invalid_argument_error("min_jerk: T and dt must be positive");
  std::size_t n = static_cast<std::size_t>(std::ceil(T / dt)) + 1;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) * dt;
    v[i] = t >= T ? 0.0 : min_jerk_speed(d, T, t);
  }
  v.back() = 0.0;
  return v;
}

// Normalized bell 16(u^2 - 2u^3 + u^4): the min-jerk speed shape scaled to
// peak 1 at u = 1/2.
inline double bell_norm(double u) {
  double u2 = u * u;
  return 16.0 * (u2 - 2.0 * u2 * u + u2 * u2);
}

// ---------------------------------------------------------------------------
// Configuration.
// ---------------------------------------------------------------------------

struct SynthConfig {
  double fs = 120.0;  // sample rate, Hz

  // Peak speeds: not-careful baselines plus the careful-minus-not-careful
  // ensemble gap (constant per label, so same-seed pairs realize the gap
  // exactly).
  double transport_peak_base = 0.95;    // m/s, empty cup
  double transport_peak_gap = -0.276;   // full minus empty
  double reach_peak_base = 1.10;        // m/s, empty cup
  double reach_peak_gap = -0.202;

  // Transport durations, clamped to +/- 3 sd and floored.
  double duration_mean_empty = 1.62;  // s
  double duration_sd_empty = 0.50;
  double duration_mean_full = 2.32;
  double duration_sd_full = 0.59;
  double duration_floor = 0.3;

  double reach_duration = 1.0;  // s, both labels (only the peak differs)

  // Terminal-approach rate k of the exponential settle xdot = -k x; drawn
  // per label, clamped +/- 3 sd, floored. These set the class phase-space
  // slopes the classifier learns.
  double approach_rate_empty = 8.5;   // 1/s
  double approach_jitter_empty = 0.45;
  double approach_rate_full = 5.0;
  double approach_jitter_full = 0.30;
  double approach_rate_floor = 1.0;

  double settle_stop = 0.00025;  // m: truncate the settle here and hold
  double min_rise = 0.15;        // s: minimum rise length regardless of duration draw

  double pre_dwell = 0.2;    // s at rest before the reach
  double grasp_dwell = 0.35; // s at the cup (annotated as reach tail)
  double hold_dwell = 0.60;  // s stationary at the handover point

  double noise_sd = 4e-5;     // m, white positional noise on every axis
  double curvature_sd = 0.01; // m, lateral bow amplitude of the reach path

  // Nominal layout; directions come from these anchors while the actual
  // per-trial distances follow from the drawn kinematics.
  Vec3 start{0.0, 0.0, 0.0};
  Vec3 cup_nominal{0.6, 0.0, 0.0};
  Vec3 handover_nominal{1.2, 0.0, 0.0};

  std::uint64_t seed = 0;
};

namespace detail {

struct SynthLabelParams {
  double transport_peak, reach_peak, duration_mean, duration_sd, approach_rate, approach_jitter;
};

inline SynthLabelParams label_params(const SynthConfig& c, Label l) {
  if (l == Label::Careful) {
    return {c.transport_peak_base + c.transport_peak_gap, c.reach_peak_base + c.reach_peak_gap,
            c.duration_mean_full, c.duration_sd_full, c.approach_rate_full,
            c.approach_jitter_full};
  }
  return {c.transport_peak_base, c.reach_peak_base, c.duration_mean_empty, c.duration_sd_empty,
          c.approach_rate_empty, c.approach_jitter_empty};
}

// Unit vector perpendicular to d (for the reach bow).
inline Vec3 any_perpendicular(Vec3 d) {
  Vec3 axis = std::abs(d.z) < 0.9 * norm(d) ? Vec3{0.0, 0.0, 1.0} : Vec3{0.0, 1.0, 0.0};
  Vec3 c{d.y * axis.z - d.z * axis.y, d.z * axis.x - d.x * axis.z, d.x * axis.y - d.y * axis.x};
  return normalized(c);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Trial synthesis.
// ---------------------------------------------------------------------------

inline Trajectory synth_trial(Label label, const SynthConfig& cfg, std::uint64_t seed) {
  if (!(cfg.fs > 0.0)) throw invalid_argument_error("synth: fs must be positive");
  if (!(cfg.settle_stop > 0.0)) throw invalid_argument_error("synth: settle_stop must be positive");
  const detail::SynthLabelParams par = detail::label_params(cfg, label);
  Rng rng(seed);

  // Draw order is part of the determinism contract: duration, approach rate,
  // reach bow amplitude, then per-sample noise.
  double lo = std::max(cfg.duration_floor, par.duration_mean - 3.0 * par.duration_sd);
  double hi = par.duration_mean + 3.0 * par.duration_sd;
  double T = par.duration_mean + par.duration_sd * rng.normal();
  T = T < lo ? lo : (T > hi ? hi : T);
  double k = rng.normal_clamped3(par.approach_rate, par.approach_jitter);
  if (k < cfg.approach_rate_floor) k = cfg.approach_rate_floor;
  double bow = rng.normal(0.0, cfg.curvature_sd);

  const double fs = cfg.fs;
  const double v_pk = par.transport_peak;
  const double x_peak = v_pk / k;  // speed continuity at the rise/settle blend
  const double t_settle = std::log(x_peak / cfg.settle_stop) / k;
  const double T_a = std::max(cfg.min_rise, T - t_settle);

  // Rise: half min-jerk bell 0 -> v_pk over T_a, integrated by trapezoid.
  // Sampled junction-inclusive (u = 1/2 on the last rise sample), so the
  // peak speed v_pk is realized exactly and same-seed label pairs exhibit
  // the configured peak gap exactly.
  std::size_t n_a = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(T_a * fs)));
  const double T_a_real = static_cast<double>(n_a) / fs;
  std::vector<double> rise_v(n_a + 1);
  for (std::size_t i = 0; i <= n_a; ++i) {
    double u = static_cast<double>(i) / (2.0 * static_cast<double>(n_a));
    rise_v[i] = v_pk * bell_norm(u);
  }
  std::vector<double> xprof;  // distance to the attractor over the transport
  const double d_transport = (8.0 / 15.0) * v_pk * T_a_real + x_peak;
  double acc = 0.0;
  xprof.push_back(d_transport);
  for (std::size_t i = 1; i <= n_a; ++i) {
    acc += 0.5 * (rise_v[i] + rise_v[i - 1]) / fs;
    xprof.push_back(d_transport - acc);
  }
  // Settle: exponential decay from the realized rise end, truncated.
  double x0 = xprof.back();
  std::size_t n_settle_cap =
      static_cast<std::size_t>(std::llround(t_settle * fs)) + 600;
  for (std::size_t j = 1; j <= n_settle_cap; ++j) {
    double x = x0 * std::exp(-k * static_cast<double>(j) / fs);
    if (x <= cfg.settle_stop) break;
    xprof.push_back(x);
  }

  // Reach: full min-jerk bell with the label's peak over the fixed duration.
  std::size_t n_reach = static_cast<std::size_t>(std::llround(cfg.reach_duration * fs));
  std::vector<double> reach_s(n_reach, 0.0);
  {
    double a = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < n_reach; ++i) {
      double u = (static_cast<double>(i) / fs) / cfg.reach_duration;
      double v = par.reach_peak * bell_norm(u);
      if (i > 0) a += 0.5 * (v + prev) / fs;
      prev = v;
      reach_s[i] = a;
    }
  }
  const double d_reach = reach_s.back();

  std::size_t n_pre = static_cast<std::size_t>(std::llround(cfg.pre_dwell * fs));
  std::size_t n_grasp = static_cast<std::size_t>(std::llround(cfg.grasp_dwell * fs));
  std::size_t n_hold = static_cast<std::size_t>(std::llround(cfg.hold_dwell * fs));

  const Vec3 reach_dir = normalized(cfg.cup_nominal - cfg.start);
  const Vec3 carry_dir = normalized(cfg.handover_nominal - cfg.cup_nominal);
  const Vec3 bow_dir = detail::any_perpendicular(reach_dir);
  const Vec3 cup_point = cfg.start + d_reach * reach_dir;

  Trajectory traj;
  traj.cup = cup_of(label);
  traj.cup_pos = cup_point;

  auto push = [&](Vec3 p, Phase ph) {
    traj.t.push_back(static_cast<double>(traj.t.size()) / fs);
    traj.p.push_back(p);
    traj.phase.push_back(ph);
  };

  for (std::size_t i = 0; i < n_pre; ++i) push(cfg.start, Phase::Pre);
  for (std::size_t i = 0; i < n_reach; ++i) {
    // Lateral bow parameterized by traveled fraction: zero lateral speed at
    // both ends, so the path re-joins the axis exactly at the cup.
    double frac = d_reach > 0.0 ? reach_s[i] / d_reach : 0.0;
    Vec3 p = cfg.start + reach_s[i] * reach_dir +
             (bow * std::sin(std::numbers::pi_v<double> * frac)) * bow_dir;
    push(p, Phase::Reach);
  }
  // Grasp dwell: stationary at the cup; the CSV schema folds it into reach.
  for (std::size_t i = 0; i < n_grasp; ++i) push(cup_point, Phase::Reach);
  for (double x : xprof) push(cup_point + (d_transport - x) * carry_dir, Phase::Carry);
  const Vec3 endpoint = cup_point + (d_transport - xprof.back()) * carry_dir;
  for (std::size_t i = 0; i < n_hold; ++i) push(endpoint, Phase::Handover);

  // The handover location is where the wrist actually came to rest.
  traj.handover_pos = endpoint;

  for (Vec3& p : traj.p) {
    p.x += rng.normal(0.0, cfg.noise_sd);
    p.y += rng.normal(0.0, cfg.noise_sd);
    p.z += rng.normal(0.0, cfg.noise_sd);
  }
  return traj;
}

// Deterministic dataset: n_per_label trials of each class, per-trial seeds
// derived from cfg.seed, ids "empty_NNN" / "full_NNN".
inline Dataset synth_dataset(const SynthConfig& cfg, std::size_t n_per_label) {
  if (n_per_label == 0) throw invalid_argument_error("synth_dataset: n_per_label must be > 0");
  Dataset data;
  data.reserve(2 * n_per_label);
  std::uint64_t idx = 0;
  for (Label lab : {Label::NotCareful, Label::Careful}) {
    for (std::size_t i = 0; i < n_per_label; ++i, ++idx) {
      Trajectory tr = synth_trial(lab, cfg, derive_seed(cfg.seed, idx));
      std::string num = std::to_string(i);
      while (num.size() < 3) num.insert(num.begin(), '0');
      tr.id = std::string(to_string(tr.cup)) + "_" + num;
      data.push_back(std::move(tr));
    }
  }
  return data;
}

}  // namespace handover
