#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "handover/classifier.hpp"
#include "handover/core.hpp"
#include "handover/synth.hpp"

using namespace handover;

namespace {

// Hand-built model pair with prescribed slopes (covariances consistent with
// a unit-variance line of the given slope).
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

// Distance stream whose phase-space slope is exactly Y at every sample:
// x(t) = x0 exp(Y t).
std::vector<double> exponential_stream(double Y, double x0, double seconds, double dt) {
  std::size_t n = static_cast<std::size_t>(seconds / dt);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = x0 * std::exp(Y * static_cast<double>(i) * dt);
  return d;
}

}  // namespace

TEST_CASE("slope observation: hand arithmetic, skip, clamp") {
  ClassifierConfig cfg;
  auto x = slope_observation(1.00, -1.0, 0.99, -1.02, cfg);
  REQUIRE(x.has_value());
  REQUIRE(*x == Catch::Approx(2.0).margin(1e-12));

  REQUIRE_FALSE(slope_observation(1.0, -1.0, 1.0, -1.02, cfg).has_value());

  auto clamped = slope_observation(0.0, 0.0, 1e-3, 10.0, cfg);
  REQUIRE(clamped.has_value());
  REQUIRE(*clamped == 50.0);
  auto clamped_neg = slope_observation(0.0, 0.0, 1e-3, -10.0, cfg);
  REQUIRE(*clamped_neg == -50.0);
}

TEST_CASE("belief step reproduces the worked example") {
  ClassifierConfig cfg;  // eps 0.14, dt 1/120, ErrorProjected
  ModelPair models = pair_with_slopes(-0.5, -2.0);
  Belief b{0.5, 0.5};
  double X = -2.0;
  // e = X - (b1 Y1 + b2 Y2) = -2 + 1.25 = -0.75
  // db = eps * e * Y = [0.0525, 0.21]; raw = 0.5 + db/120
  double raw1 = 0.5 + 0.0525 / 120.0;  // 0.5004375
  double raw2 = 0.5 + 0.21 / 120.0;    // 0.50175
  Belief out = belief_step(b, X, models, cfg);
  REQUIRE(out[0] == Catch::Approx(raw1 / (raw1 + raw2)).margin(1e-12));
  REQUIRE(out[1] == Catch::Approx(raw2 / (raw1 + raw2)).margin(1e-12));
  REQUIRE(out[1] > out[0]);
}

TEST_CASE("saturated belief is a fixed point when the evidence matches") {
  ClassifierConfig cfg;
  ModelPair models = pair_with_slopes(-0.5, -2.0);
  Belief b{0.0, 1.0};
  Belief out = belief_step(b, models.careful.Y, models, cfg);
  REQUIRE(out[0] == 0.0);
  REQUIRE(out[1] == 1.0);
}

TEST_CASE("zero error with symmetric slope magnitudes leaves the belief unchanged") {
  ClassifierConfig cfg;
  ModelPair models = pair_with_slopes(-1.0, 1.0);
  Belief b{0.5, 0.5};
  double X = b[0] * models.not_careful.Y + b[1] * models.careful.Y;  // = 0
  Belief out = belief_step(b, X, models, cfg);
  REQUIRE(out[0] == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(out[1] == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("the literal update rule cannot break the symmetric start") {
  ClassifierConfig cfg;
  cfg.update_rule = UpdateRule::PaperLiteral;
  ModelPair models = pair_with_slopes(-2.0, -0.5);
  Belief b{0.5, 0.5};
  for (double X : {-2.0, -0.5, -1.0, 3.0}) {
    Belief out = belief_step(b, X, models, cfg);
    REQUIRE(out[0] == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(out[1] == Catch::Approx(0.5).margin(1e-12));
  }
}

TEST_CASE("simplex invariant holds under random hammering") {
  ClassifierConfig cfg;
  Rng rng(12345);
  for (int i = 0; i < 10000; ++i) {
    double y2 = -rng.uniform(0.2, 10.0);
    double y1 = y2 * rng.uniform(1.2, 4.0);
    ModelPair models = pair_with_slopes(y1, y2);
    double b1 = rng.uniform();
    Belief b{b1, 1.0 - b1};
    double X = rng.uniform(-50.0, 50.0);
    Belief out = belief_step(b, X, models, cfg);
    REQUIRE(out[0] >= 0.0);
    REQUIRE(out[0] <= 1.0);
    REQUIRE(out[1] >= 0.0);
    REQUIRE(out[1] <= 1.0);
    REQUIRE(out[0] + out[1] == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("constant evidence at a class slope converges to that class") {
  ClassifierConfig cfg;
  ModelPair models = pair_with_slopes(-6.0, -3.5);
  std::vector<double> stream = exponential_stream(models.careful.Y, 10.0, 2.0, cfg.dt);
  OnlineResult r = classify_online(stream, models, cfg);
  REQUIRE(r.decision.has_value());
  REQUIRE(r.decision->label == Label::Careful);
  REQUIRE(r.decision->step < stream.size() - 1);  // strictly before stream end

  // Monotone convergence of the winning component after the first update.
  bool monotone = true;
  double prev = 0.0;
  bool started = false;
  for (std::size_t i = 0; i < r.trace.t.size(); ++i) {
    if (std::isnan(r.trace.X[i])) continue;
    if (started && r.trace.b_careful[i] < prev - 1e-12) monotone = false;
    prev = r.trace.b_careful[i];
    started = true;
  }
  REQUIRE(monotone);

  std::vector<double> nc_stream = exponential_stream(models.not_careful.Y, 10.0, 2.0, cfg.dt);
  OnlineResult r2 = classify_online(nc_stream, models, cfg);
  REQUIRE(r2.decision.has_value());
  REQUIRE(r2.decision->label == Label::NotCareful);
}

TEST_CASE("constant distance stays undecided at the uniform belief") {
  ClassifierConfig cfg;
  ModelPair models = pair_with_slopes(-6.0, -3.5);
  std::vector<double> flat(300, 0.75);
  OnlineResult r = classify_online(flat, models, cfg);
  REQUIRE_FALSE(r.decision.has_value());
  REQUIRE(r.belief[0] == 0.5);
  REQUIRE(r.belief[1] == 0.5);
}

TEST_CASE("streams shorter than two samples are rejected") {
  ClassifierConfig cfg;
  ModelPair models = pair_with_slopes(-6.0, -3.5);
  REQUIRE_THROWS_AS(classify_online({1.0}, models, cfg), short_input_error);
}

TEST_CASE("identical streams produce identical traces") {
  ClassifierConfig cfg;
  ModelPair models = pair_with_slopes(-7.0, -4.0);
  std::vector<double> stream = exponential_stream(-4.0, 10.0, 1.5, cfg.dt);
  OnlineResult a = classify_online(stream, models, cfg);
  OnlineResult b = classify_online(stream, models, cfg);
  REQUIRE(a.trace.b_careful == b.trace.b_careful);
  REQUIRE(a.trace.b_not_careful == b.trace.b_not_careful);
  REQUIRE(a.decision->step == b.decision->step);
}

TEST_CASE("inserting stationary samples does not change the decision") {
  ClassifierConfig cfg;
  cfg.filter_enabled = false;  // contract-level semantics: raw differences
  ModelPair models = pair_with_slopes(-6.0, -3.5);
  for (Label lab : {Label::NotCareful, Label::Careful}) {
    double Y = models.by_label(lab).Y;
    std::vector<double> stream = exponential_stream(Y, 10.0, 2.0, cfg.dt);
    OnlineResult base = classify_online(stream, models, cfg);
    REQUIRE(base.decision.has_value());
    for (std::size_t at : {std::size_t(1), stream.size() / 3, stream.size() - 2}) {
      std::vector<double> padded = stream;
      padded.insert(padded.begin() + static_cast<std::ptrdiff_t>(at), 25, stream[at]);
      OnlineResult r = classify_online(padded, models, cfg);
      REQUIRE(r.decision.has_value());
      REQUIRE(r.decision->label == base.decision->label);
    }
  }
}

TEST_CASE("evaluate aggregates per-label accuracy and latency stats") {
  ClassifierConfig cfg;
  SynthConfig synth_cfg;
  synth_cfg.seed = 77;
  Dataset data = synth_dataset(synth_cfg, 12);
  ModelPair models = fit_pair(data);
  EvalReport rep = evaluate(data, models, cfg, MotionPhase::Transport);
  const LabelStats& nc = rep.per_label.at(Label::NotCareful);
  const LabelStats& c = rep.per_label.at(Label::Careful);
  REQUIRE(nc.n == 12);
  REQUIRE(c.n == 12);
  REQUIRE(nc.correct + nc.wrong + nc.undecided == nc.n);
  REQUIRE(c.correct + c.wrong + c.undecided == c.n);
  REQUIRE(rep.trials.size() == 24);
  // Curves are monotone non-decreasing fractions in [0, 1].
  for (const auto& [lab, curve] : rep.curves) {
    double prev = 0.0;
    for (double f : curve.fraction) {
      REQUIRE(f >= prev - 1e-12);
      REQUIRE(f <= 1.0);
      prev = f;
    }
  }
}
