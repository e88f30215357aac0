#pragma once
// Online carefulness classification by belief dynamics. A two-component
// belief over {not careful, careful} is integrated against the streamed
// phase-space slope X = d(xdot)/dx and the class eigen slopes Y1, Y2; the
// label latches the first time either component crosses the decision
// threshold, while integration continues to the end of the stream.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "handover/behavior.hpp"
#include "handover/core.hpp"
#include "handover/signal.hpp"

namespace handover {

enum class UpdateRule {
  // db_i = eps * (e * Y_i + (b_i - 1/2) * Y_i^2): the error is projected onto
  // each hypothesis slope, so evidence moves the two components in opposite
  // directions. Default.
  ErrorProjected,
  // db_i = eps * (e + (b_i - 1/2) * Y_i^2): the raw error enters as a common
  // mode; from the exact symmetric start both derivatives cancel and the
  // belief never moves. Kept selectable for comparison.
  PaperLiteral,
};

struct ClassifierConfig {
  double epsilon = 0.14;             // integration gain
  double dt = 1.0 / 120.0;           // belief integration step (stream rate)
  double decision_threshold = 0.99;  // latch when max belief reaches this
  double slope_clip = 50.0;          // |X| hard bound for raw observations
  double dx_floor = 1e-4;            // |dx| below this is near-stationary: skip
  UpdateRule update_rule = UpdateRule::ErrorProjected;

  // Online-pipeline policy (classify_online only; the pure ops above ignore
  // these). The distance stream and its rate are both passed through the same
  // causal low-pass, which cancels the filter on settling segments; the
  // filtered stream supports a tighter stationarity floor. With the filter
  // disabled, raw differences and the contract dx_floor are used.
  bool filter_enabled = true;
  double filter_cutoff = 8.0;
  double pipeline_dx_floor = 1e-5;
  // Consume only slopes at most gate_frac times the shallower class slope
  // (both negative): near-zero or positive X is rise-phase or sensor junk
  // that reads as spurious evidence for the shallow class.
  double gate_frac = 0.5;
  // Effective clip = min(slope_clip, clip_factor * steepest |Y|): junk far
  // outside the model range otherwise overflows the saturated component and
  // renormalization drags the belief backward.
  double clip_factor = 1.2;
};

// ---------------------------------------------------------------------------
// Pure per-sample ops.
// ---------------------------------------------------------------------------

// Phase-space slope between consecutive samples; empty when the wrist is
// near-stationary (|dx| under the floor).
inline std::optional<double> slope_observation(double x_prev, double xdot_prev, double x_cur,
                                               double xdot_cur, const ClassifierConfig& cfg) {
  double dx = x_cur - x_prev;
  if (std::abs(dx) < cfg.dx_floor) return std::nullopt;
  double X = (xdot_cur - xdot_prev) / dx;
  if (X > cfg.slope_clip) X = cfg.slope_clip;
  if (X < -cfg.slope_clip) X = -cfg.slope_clip;
  return X;
}

using Belief = std::array<double, 2>;  // [not careful, careful]

// One Euler step of the belief ODE followed by clamping to [0,1] and
// renormalization to the simplex.
inline Belief belief_step(const Belief& b, double X, const ModelPair& models,
                          const ClassifierConfig& cfg) {
  const double Y1 = models.not_careful.Y;
  const double Y2 = models.careful.Y;
  const double e = X - (b[0] * Y1 + b[1] * Y2);
  double db1, db2;
  if (cfg.update_rule == UpdateRule::ErrorProjected) {
    db1 = cfg.epsilon * (e * Y1 + (b[0] - 0.5) * Y1 * Y1);
    db2 = cfg.epsilon * (e * Y2 + (b[1] - 0.5) * Y2 * Y2);
  } else {
    db1 = cfg.epsilon * (e + (b[0] - 0.5) * Y1 * Y1);
    db2 = cfg.epsilon * (e + (b[1] - 0.5) * Y2 * Y2);
  }
  Belief out{b[0] + db1 * cfg.dt, b[1] + db2 * cfg.dt};
  for (double& v : out) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  double s = out[0] + out[1];
  if (s <= 0.0) return b;  // both components annihilated by an extreme error: hold
  out[0] /= s;
  out[1] /= s;
  return out;
}

// ---------------------------------------------------------------------------
// Online classification over a distance stream.
// ---------------------------------------------------------------------------

struct Decision {
  Label label = Label::NotCareful;
  std::size_t step = 0;  // sample index at which the threshold was first crossed
  double time = 0.0;     // step * dt
};

// Per-sample record of the belief evolution. X and err are NaN on skipped
// (near-stationary or gated) samples.
struct BeliefTrace {
  std::vector<double> t;
  std::vector<double> b_not_careful;
  std::vector<double> b_careful;
  std::vector<double> X;
  std::vector<double> err;
};

struct OnlineResult {
  std::optional<Decision> decision;  // latched at first crossing
  Belief belief{0.5, 0.5};           // final belief at stream end
  std::size_t n_samples = 0;
  BeliefTrace trace;
};

// Classify a uniformly sampled (1/cfg.dt) distance stream online. The stream
// and its finite-difference rate are causally low-passed with the same
// filter before slopes are formed; streams shorter than the filter warm-up
// are consumed raw.
inline OnlineResult classify_online(const std::vector<double>& dist, const ModelPair& models,
                                    const ClassifierConfig& cfg) {
  if (dist.size() < 2) throw short_input_error("classify_online: need at least 2 samples");
  const double Y1 = models.not_careful.Y;
  const double Y2 = models.careful.Y;
  const double gate = cfg.gate_frac * std::max(Y1, Y2);
  const double clip =
      std::min(cfg.slope_clip, cfg.clip_factor * std::max(std::abs(Y1), std::abs(Y2)));

  FilterSpec spec{1.0 / cfg.dt, cfg.filter_cutoff};
  bool filtered = cfg.filter_enabled && dist.size() >= 3 * filter_warmup(spec) && dist.size() >= 3;
  std::vector<double> xs, vs;
  if (filtered) {
    xs = lowpass_butter2(dist, spec, /*zero_phase=*/false);
    vs = lowpass_butter2(derivative(dist, cfg.dt), spec, /*zero_phase=*/false);
  } else {
    xs = dist;
    vs = derivative(dist, cfg.dt);
  }

  // The pipeline policy enters through an effective per-observation config:
  // a tighter stationarity floor on the noise-suppressed filtered stream,
  // and the class-scaled clip.
  ClassifierConfig eff = cfg;
  if (filtered) eff.dx_floor = cfg.pipeline_dx_floor;
  eff.slope_clip = clip;

  OnlineResult res;
  res.n_samples = dist.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto push = [&](std::size_t i, const Belief& b, double X, double e) {
    res.trace.t.push_back(static_cast<double>(i) * cfg.dt);
    res.trace.b_not_careful.push_back(b[0]);
    res.trace.b_careful.push_back(b[1]);
    res.trace.X.push_back(X);
    res.trace.err.push_back(e);
  };

  Belief b{0.5, 0.5};
  push(0, b, nan, nan);
  for (std::size_t i = 1; i < dist.size(); ++i) {
    std::optional<double> obs = slope_observation(xs[i - 1], vs[i - 1], xs[i], vs[i], eff);
    if (!obs || *obs > gate) {
      push(i, b, nan, nan);
      continue;
    }
    double X = *obs;
    double e = X - (b[0] * Y1 + b[1] * Y2);
    b = belief_step(b, X, models, cfg);
    push(i, b, X, e);
    if (!res.decision) {
      if (b[1] >= cfg.decision_threshold) {
        res.decision = Decision{Label::Careful, i, static_cast<double>(i) * cfg.dt};
      } else if (b[0] >= cfg.decision_threshold) {
        res.decision = Decision{Label::NotCareful, i, static_cast<double>(i) * cfg.dt};
      }
    }
  }
  res.belief = b;
  return res;
}

// ---------------------------------------------------------------------------
// Batch evaluation.
// ---------------------------------------------------------------------------

struct TrialOutcome {
  std::string id;
  Label truth = Label::NotCareful;
  std::optional<Label> predicted;    // empty = undecided
  std::size_t decided_step = 0;      // valid when predicted
  std::size_t stream_len = 0;
  double margin = 0.0;  // seconds between decision and stream end (when decided)
};

struct LabelStats {
  std::size_t n = 0;
  std::size_t correct = 0;
  std::size_t wrong = 0;
  std::size_t undecided = 0;
  double accuracy = 0.0;                  // correct / n (undecided counts against)
  std::vector<std::size_t> decided_steps; // decision-step distribution (all decided)
  double p97_correct_step = -1.0;  // 97th-percentile decision step among correct; -1 if none
};

// Fraction of trials decided by each step index, with a Wald binomial
// confidence interval (z = 1.96).
struct DecidedCurve {
  std::vector<double> fraction;
  std::vector<double> ci_half_width;
};

struct EvalReport {
  MotionPhase phase = MotionPhase::Transport;
  std::map<Label, LabelStats> per_label;
  std::map<Label, DecidedCurve> curves;
  std::vector<TrialOutcome> trials;
};

inline EvalReport evaluate(const Dataset& data, const ModelPair& models,
                           const ClassifierConfig& cfg, MotionPhase phase) {
  if (data.empty()) throw invalid_argument_error("evaluate: empty dataset");
  EvalReport rep;
  rep.phase = phase;
  rep.per_label[Label::NotCareful] = {};
  rep.per_label[Label::Careful] = {};
  std::map<Label, std::size_t> max_len{{Label::NotCareful, 0}, {Label::Careful, 0}};

  for (const auto& traj : data) {
    PhaseStream s = extract_phase_stream(traj, phase);
    if (s.dist.size() < 2) {
      throw validation_error("trial '" + traj.id + "': phase span too short to classify");
    }
    OnlineResult r = classify_online(s.dist, models, cfg);
    TrialOutcome out;
    out.id = traj.id;
    out.truth = label_of(traj.cup);
    out.stream_len = s.dist.size();
    if (r.decision) {
      out.predicted = r.decision->label;
      out.decided_step = r.decision->step;
      out.margin = static_cast<double>(s.dist.size() - 1 - r.decision->step) * cfg.dt;
    }
    rep.trials.push_back(std::move(out));
    max_len[label_of(traj.cup)] = std::max(max_len[label_of(traj.cup)], s.dist.size());
  }
  std::sort(rep.trials.begin(), rep.trials.end(),
            [](const TrialOutcome& a, const TrialOutcome& b) { return a.id < b.id; });

  for (Label lab : {Label::NotCareful, Label::Careful}) {
    LabelStats& st = rep.per_label[lab];
    std::vector<double> correct_steps;
    for (const auto& tr : rep.trials) {
      if (tr.truth != lab) continue;
      ++st.n;
      if (!tr.predicted) {
        ++st.undecided;
        continue;
      }
      st.decided_steps.push_back(tr.decided_step);
      if (*tr.predicted == tr.truth) {
        ++st.correct;
        correct_steps.push_back(static_cast<double>(tr.decided_step));
      } else {
        ++st.wrong;
      }
    }
    if (st.n == 0) {
      throw missing_label_error("evaluate: dataset has no '" + std::string(to_string(lab)) +
                                "' trials");
    }
    st.accuracy = static_cast<double>(st.correct) / static_cast<double>(st.n);
    if (!correct_steps.empty()) {
      st.p97_correct_step = percentile_nearest_rank(correct_steps, 97.0);
    }
    // Decided-fraction curve over the label's longest stream.
    DecidedCurve curve;
    std::size_t len = max_len[lab];
    curve.fraction.assign(len, 0.0);
    curve.ci_half_width.assign(len, 0.0);
    for (std::size_t s = 0; s < len; ++s) {
      std::size_t decided = 0;
      for (const auto& tr : rep.trials) {
        if (tr.truth != lab) continue;
        if (tr.predicted && tr.decided_step <= s) ++decided;
      }
      double f = static_cast<double>(decided) / static_cast<double>(st.n);
      curve.fraction[s] = f;
      curve.ci_half_width[s] = 1.96 * std::sqrt(f * (1.0 - f) / static_cast<double>(st.n));
    }
    rep.curves[lab] = std::move(curve);
  }
  return rep;
}

}  // namespace handover
