// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Each criterion is self-contained and uses frozen seeds and
// tolerances; details are printed so regressions are diagnosable from CI logs.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "handover/behavior.hpp"
#include "handover/classifier.hpp"
#include "handover/core.hpp"
#include "handover/harness.hpp"
#include "handover/robosim.hpp"
#include "handover/signal.hpp"
#include "handover/synth.hpp"

using namespace handover;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTrainSeed = 20240101;
constexpr std::uint64_t kEvalSeed = 20240202;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
  return buf;
}

ModelPair pair_with_slopes(double y_nc, double y_c) {
  auto make = [](double y, Label lab) {
    BehaviorModel m;
    m.label = lab;
    m.n_points = 100;
    double nrm = std::hypot(1.0, y);
    m.v_x = 1.0 / nrm;
    m.v_xdot = y / nrm;
    m.Y = y;
    m.lam1 = 1.0;
    m.lam2 = 0.0;
    m.cov = {m.v_x * m.v_x, m.v_x * m.v_xdot, m.v_xdot * m.v_xdot};
    return m;
  };
  ModelPair p;
  p.not_careful = make(y_nc, Label::NotCareful);
  p.careful = make(y_c, Label::Careful);
  return p;
}

// --------------------------------------------------------------------------
// 1. Belief simplex invariant under randomized hammering.
// --------------------------------------------------------------------------
Outcome criterion1() {
  auto t0 = std::chrono::steady_clock::now();
  ClassifierConfig cfg;
  Rng rng(111);
  double worst_sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    double shallow = -rng.uniform(0.1, 10.0);
    double steep = shallow * rng.uniform(1.05, 5.0);
    ModelPair models = pair_with_slopes(steep, shallow);
    double b1 = rng.uniform();
    Belief b{b1, 1.0 - b1};
    double X = rng.uniform(-50.0, 50.0);
    Belief out = belief_step(b, X, models, cfg);
    if (out[0] < 0.0 || out[0] > 1.0 || out[1] < 0.0 || out[1] > 1.0) {
      return {false, "component left [0,1] at iteration " + std::to_string(i)};
    }
    worst_sum = std::max(worst_sum, std::abs(out[0] + out[1] - 1.0));
  }
  double dt = seconds_since(t0);
  bool pass = worst_sum <= 1e-9 && dt < 5.0;
  return {pass, "100000 randomized belief steps, max |b1+b2-1| = " + fmt(worst_sum, 3) + ", " +
                    fmt(dt, 3) + " s"};
}

// --------------------------------------------------------------------------
// 2. Constant-slope streams converge to the matching label inside 2 s.
// --------------------------------------------------------------------------
Outcome criterion2() {
  ClassifierConfig cfg;
  Rng rng(222);
  double worst_time = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    double shallow = -rng.uniform(3.0, 4.6);
    double steep = shallow * rng.uniform(1.5, 7.0 / std::abs(shallow));
    ModelPair models = pair_with_slopes(steep, shallow);
    for (Label lab : {Label::NotCareful, Label::Careful}) {
      double Y = models.by_label(lab).Y;
      std::vector<double> stream(240);
      for (std::size_t i = 0; i < stream.size(); ++i) {
        stream[i] = 10.0 * std::exp(Y * static_cast<double>(i) * cfg.dt);
      }
      OnlineResult r = classify_online(stream, models, cfg);
      if (!r.decision) {
        return {false, "pair " + std::to_string(trial) + " (Y = " + fmt(Y) + "): no decision"};
      }
      if (r.decision->label != lab) {
        return {false, "pair " + std::to_string(trial) + " (Y = " + fmt(Y) + "): wrong label"};
      }
      if (r.decision->time >= 2.0) {
        return {false, "pair " + std::to_string(trial) + ": decision at " +
                           fmt(r.decision->time) + " s >= 2 s"};
      }
      worst_time = std::max(worst_time, r.decision->time);
    }
  }
  return {true, "100/100 model pairs, both labels, slowest decision " + fmt(worst_time, 3) + " s"};
}

// --------------------------------------------------------------------------
// 3. Train/evaluate accuracy floors and the full-easier-than-empty asymmetry.
// --------------------------------------------------------------------------
struct EvalContext {
  ModelPair models;
  Dataset eval;
  EvalReport transport;
};

Outcome criterion3(EvalContext& ctx) {
  auto t0 = std::chrono::steady_clock::now();
  SynthConfig train_cfg;
  train_cfg.seed = kTrainSeed;
  Dataset train = synth_dataset(train_cfg, 100);
  SynthConfig eval_cfg;
  eval_cfg.seed = kEvalSeed;
  ctx.eval = synth_dataset(eval_cfg, 200);
  ctx.models = fit_pair(train);
  ClassifierConfig ccfg;
  ctx.transport = evaluate(ctx.eval, ctx.models, ccfg, MotionPhase::Transport);
  double elapsed = seconds_since(t0);

  double acc_full = ctx.transport.per_label.at(Label::Careful).accuracy;
  double acc_empty = ctx.transport.per_label.at(Label::NotCareful).accuracy;
  bool pass = acc_full >= 0.75 && acc_empty >= 0.55 && acc_full > acc_empty && elapsed < 30.0;
  return {pass, "full->careful " + fmt(acc_full, 4) + " (floor 0.75), empty->not_careful " +
                    fmt(acc_empty, 4) + " (floor 0.55), " + fmt(elapsed, 3) + " s"};
}

// --------------------------------------------------------------------------
// 4. Decisions land well before motion completion.
// --------------------------------------------------------------------------
Outcome criterion4(const EvalContext& ctx) {
  std::size_t correct = 0, early = 0;
  for (const auto& tr : ctx.transport.trials) {
    if (!tr.predicted || *tr.predicted != tr.truth) continue;
    ++correct;
    if (tr.margin >= 0.4) ++early;
  }
  if (correct == 0) return {false, "no correctly classified trials"};
  double frac = static_cast<double>(early) / static_cast<double>(correct);
  double p97_nc = ctx.transport.per_label.at(Label::NotCareful).p97_correct_step;
  double p97_c = ctx.transport.per_label.at(Label::Careful).p97_correct_step;
  bool pass = frac >= 0.90;
  return {pass, fmt(100.0 * frac, 4) + "% of " + std::to_string(correct) +
                    " correct trials decided >= 0.4 s early; p97 decision step: not_careful " +
                    fmt(p97_nc, 5) + ", careful " + fmt(p97_c, 5)};
}

// --------------------------------------------------------------------------
// 5. Transport-fit models transfer poorly to the reach phase.
// --------------------------------------------------------------------------
Outcome criterion5(const EvalContext& ctx) {
  ClassifierConfig ccfg;
  EvalReport reach = evaluate(ctx.eval, ctx.models, ccfg, MotionPhase::Reach);
  double full_reach = reach.per_label.at(Label::Careful).accuracy;
  double full_transport = ctx.transport.per_label.at(Label::Careful).accuracy;
  bool pass = full_reach < full_transport;
  return {pass, "full-cup accuracy on reach " + fmt(full_reach, 4) + " < transport " +
                    fmt(full_transport, 4)};
}

// --------------------------------------------------------------------------
// 6. Filter and min-jerk closed-form analytics.
// --------------------------------------------------------------------------
Outcome criterion6() {
  auto mag = [](const Biquad& q, double w) {
    std::complex<double> z = std::exp(std::complex<double>(0.0, -w));
    std::complex<double> num = q.b0 + q.b1 * z + q.b2 * z * z;
    std::complex<double> den = 1.0 + q.a1 * z + q.a2 * z * z;
    return std::abs(num / den);
  };
  for (auto [fs, fc] : {std::pair{120.0, 8.0}, {100.0, 8.0}, {120.0, 20.0}}) {
    Biquad q = butter2_lowpass({fs, fc});
    double dc = mag(q, 0.0);
    if (std::abs(dc - 1.0) > 1e-9) {
      return {false, "DC gain off by " + fmt(std::abs(dc - 1.0), 3)};
    }
    double db = 20.0 * std::log10(mag(q, 2.0 * std::numbers::pi_v<double> * fc / fs));
    if (std::abs(db - (-3.0102999566)) > 0.2) {
      return {false, "cutoff magnitude " + fmt(db, 5) + " dB (expected -3.01 +- 0.2)"};
    }
  }

  Rng rng(666);
  double worst_peak = 0.0, worst_integral = 0.0;
  for (int i = 0; i < 50; ++i) {
    double d = rng.uniform(0.05, 3.0);
    double T = rng.uniform(0.2, 5.0);
    double peak_err = std::abs(min_jerk_speed(d, T, T / 2.0) - 1.875 * d / T);
    worst_peak = std::max(worst_peak, peak_err);

    std::size_t n = 2000;
    double h = T / static_cast<double>(n);
    double s = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
      s += ((j % 2 == 1) ? 4.0 : 2.0) * min_jerk_speed(d, T, static_cast<double>(j) * h);
    }
    worst_integral = std::max(worst_integral, std::abs(s * h / 3.0 - d));
  }
  bool pass = worst_peak <= 1e-9 && worst_integral <= 1e-6;
  return {pass, "DC/cutoff magnitudes in band; 50 random (d, T): max peak error " +
                    fmt(worst_peak, 3) + ", max integral error " + fmt(worst_integral, 3)};
}

// --------------------------------------------------------------------------
// 7. Slope recovery on collinear clouds; eigen residuals on random SPD.
// --------------------------------------------------------------------------
Outcome criterion7() {
  double worst_slope = 0.0;
  for (int i = 0; i < 20; ++i) {
    double m = -3.0 + 2.9 * static_cast<double>(i) / 19.0;  // -3 .. -0.1
    std::vector<PhasePoint> pts;
    for (int j = 0; j < 15; ++j) {
      double x = 0.01 + 0.11 * static_cast<double>(j) / 14.0;
      pts.push_back({x, m * x});
    }
    BehaviorModel model = fit_behavior(pts, Label::Careful);
    worst_slope = std::max(worst_slope, std::abs(model.Y - m));
  }

  Rng rng(777);
  double worst_resid = 0.0;
  for (int i = 0; i < 1000; ++i) {
    double l1 = rng.uniform(1e-3, 10.0);
    double l2 = rng.uniform(1e-3, 10.0);
    if (l2 > l1) std::swap(l1, l2);
    double th = rng.uniform(0.0, 2.0 * std::numbers::pi_v<double>);
    double c = std::cos(th), s = std::sin(th);
    Sym2 m{l1 * c * c + l2 * s * s, (l1 - l2) * s * c, l1 * s * s + l2 * c * c};
    EigenPair e = eigen_sym2(m);
    double rx = m.xx * e.v1x + m.xv * e.v1d - e.lam1 * e.v1x;
    double rd = m.xv * e.v1x + m.vv * e.v1d - e.lam1 * e.v1d;
    worst_resid = std::max({worst_resid, std::hypot(rx, rd),
                            std::abs(e.lam1 + e.lam2 - (m.xx + m.vv)),
                            std::abs(e.lam1 * e.lam2 - (m.xx * m.vv - m.xv * m.xv))});
  }
  bool pass = worst_slope <= 1e-9 && worst_resid <= 1e-9;
  return {pass, "20 collinear slopes, max |Y - m| = " + fmt(worst_slope, 3) +
                    "; 1000 SPD eigenpairs, max residual " + fmt(worst_resid, 3)};
}

// --------------------------------------------------------------------------
// 8. Simulator contracts: displacement, spill proxy, exact time identity.
// --------------------------------------------------------------------------
Outcome criterion8() {
  double dt = 1.0 / 40.0;
  ExpressiveSpec exp_spec = default_expressive_spec();
  double worst_disp = 0.0;
  for (const VelocityProfile* prof : {&exp_spec.careful, &exp_spec.not_careful}) {
    for (double length : {0.3, 0.5, 0.8, 1.2}) {
      TrialLog log;
      EndEffectorState s;
      Vec3 target{length, 0.0, 0.0};
      detail::play_profile_segment(log, s, target, *prof, false, dt);
      worst_disp = std::max(worst_disp, distance(s.pos, target));
    }
  }
  if (worst_disp > 1e-3) {
    return {false, "expressive segment displacement error " + fmt(worst_disp, 3) + " > 1e-3"};
  }

  SynthConfig scfg;
  Trajectory human = synth_trial(Label::Careful, scfg, 4242);
  TaskGeometry geo = geometry_at(human.handover_pos);
  for (bool expressive : {false, true}) {
    TrialSetup setup;
    setup.cup = Cup::Full;
    if (expressive) {
      setup.controller = exp_spec;
    } else {
      setup.controller = NeutralSpec{};
    }
    setup.geometry = geo;
    setup.human = human;
    TrialLog log = run_trial(setup);
    if (log.metrics.spill) {
      return {false, std::string("full-cup ") + (expressive ? "expressive" : "neutral") +
                         " trial spilled"};
    }
  }
  std::vector<EndEffectorState> adversarial;
  adversarial.push_back({{0, 0, 0}, {0, 0, 0}, 0.0});
  adversarial.push_back({{0.0375, 0, 0}, {1.5, 0, 0}, dt});  // one-tick jump to the cap
  if (!check_spill(adversarial, Cup::Full)) {
    return {false, "step-velocity adversarial trace did not register a spill"};
  }

  Rng rng(888);
  for (int b = 0; b < 100; ++b) {
    std::vector<Cup> cups{Cup::Full, Cup::Full, Cup::Empty, Cup::Empty};
    for (std::size_t i = cups.size(); i > 1; --i) {
      std::swap(cups[i - 1], cups[static_cast<std::size_t>(rng.uniform() * i)]);
    }
    BlockSetup block;
    for (Cup cup : cups) {
      Trajectory h = synth_trial(label_of(cup), scfg, derive_seed(999, 4 * b + block.trials.size()));
      TrialSetup ts;
      ts.cup = cup;
      if (rng.uniform() < 0.5) {
        ts.controller = NeutralSpec{};
      } else {
        ts.controller = exp_spec;
      }
      ts.geometry = geometry_at(h.handover_pos);
      ts.human = h;
      block.trials.push_back(std::move(ts));
    }
    BlockMetrics bm = run_block(block);
    if (bm.net_human_time != bm.total_time - bm.robot_busy_total) {
      return {false, "net-time identity violated on randomized block " + std::to_string(b)};
    }
  }
  if (net_human_time(60.0, {3.0, 3.0, 3.0, 3.0}) != 48.0) {
    return {false, "hand-constructed net time != 48 s"};
  }
  return {true, "max displacement error " + fmt(worst_disp, 3) +
                    "; spill proxy clean/adversarial as expected; identity exact on 100 blocks"};
}

// --------------------------------------------------------------------------
// 9. Busy-time ordering between the conditions.
// --------------------------------------------------------------------------
Outcome criterion9() {
  SynthConfig scfg;
  Trajectory full_human = synth_trial(Label::Careful, scfg, 31);
  Trajectory empty_human = synth_trial(Label::NotCareful, scfg, 32);
  auto busy = [&](const Trajectory& human, Cup cup, ControllerSpec ctrl) {
    TrialSetup s;
    s.cup = cup;
    s.controller = std::move(ctrl);
    s.geometry = geometry_at(human.handover_pos);
    s.human = human;
    return run_trial(s).metrics.busy_time;
  };
  double exp_empty = busy(empty_human, Cup::Empty, default_expressive_spec());
  double neu_empty = busy(empty_human, Cup::Empty, NeutralSpec{});
  double exp_full = busy(full_human, Cup::Full, default_expressive_spec());
  double neu_full = busy(full_human, Cup::Full, NeutralSpec{});
  bool pass = exp_empty < neu_empty && neu_full < exp_full;
  return {pass, "empty busy: expressive " + fmt(exp_empty, 4) + " < neutral " + fmt(neu_empty, 4) +
                    "; full busy: neutral " + fmt(neu_full, 4) + " < expressive " +
                    fmt(exp_full, 4)};
}

// --------------------------------------------------------------------------
// 10. Whole-pipeline byte-level reproducibility.
// --------------------------------------------------------------------------
Outcome criterion10() {
  PipelineConfig cfg;
  cfg.synth.seed = kTrainSeed;
  cfg.eval_seed = kEvalSeed;
  cfg.n_train = 100;
  cfg.n_eval = 200;

  fs::path base = fs::temp_directory_path() / "handover_acceptance";
  fs::remove_all(base);
  cfg.out_dir = (base / "run1").string();
  run_pipeline(cfg);
  cfg.out_dir = (base / "run2").string();
  run_pipeline(cfg);

  const char* names[] = {"train.csv",        "eval.csv",          "models.txt",
                         "eval_report.json", "block_neu.json",    "block_exp.json",
                         "accuracy_table.csv", "decision_curves.csv", "net_time.csv"};
  for (const char* name : names) {
    std::string a = read_text((base / "run1" / name).string());
    std::string b = read_text((base / "run2" / name).string());
    if (a != b) return {false, std::string("artifact differs between runs: ") + name};
    if (a.empty()) return {false, std::string("artifact is empty: ") + name};
  }
  return {true, "9 artifacts byte-identical across two full runs"};
}

}  // namespace

int main() {
  EvalContext ctx;
  std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, criterion1},
      {2, criterion2},
      {3, [&] { return criterion3(ctx); }},
      {4, [&] { return criterion4(ctx); }},
      {5, [&] { return criterion5(ctx); }},
      {6, criterion6},
      {7, criterion7},
      {8, criterion8},
      {9, criterion9},
      {10, criterion10},
  };

  int failures = 0;
  for (auto& [id, fn] : criteria) {
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << id << ": " << (out.pass ? "PASS" : "FAIL") << " — " << out.detail
              << "\n";
    if (!out.pass) ++failures;
  }
  if (failures > 0) {
    std::cout << failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
