#pragma once
// Gaussian phase-space behavior models: one 2-D Gaussian per motion class
// over (x, xdot) = (distance to target, its rate). The model quantity used by
// the classifier is the eigen slope Y = v_xdot / v_x of the principal
// covariance eigenvector.

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "handover/core.hpp"
#include "handover/signal.hpp"

namespace handover {

struct PhasePoint {
  double x = 0.0;     // distance to target, m
  double xdot = 0.0;  // d/dt of that distance, m/s
};

struct Sym2 {
  // [[xx, xv], [xv, vv]] over (x, xdot)
  double xx = 0.0, xv = 0.0, vv = 0.0;
};

struct EigenPair {
  double lam1 = 0.0, lam2 = 0.0;  // lam1 >= lam2
  double v1x = 0.0, v1d = 0.0;    // unit principal eigenvector (x, xdot)
};

// Closed-form symmetric 2x2 eigendecomposition.
inline EigenPair eigen_sym2(const Sym2& s) {
  EigenPair e{};
  double half_tr = 0.5 * (s.xx + s.vv);
  double half_diff = 0.5 * (s.xx - s.vv);
  double disc = std::sqrt(half_diff * half_diff + s.xv * s.xv);
  e.lam1 = half_tr + disc;
  e.lam2 = half_tr - disc;
  if (s.xv != 0.0) {
    // (S - lam1 I) v = 0  =>  v ∝ (xv, lam1 - xx); pick the better-conditioned row
    double ax = e.lam1 - s.vv;
    double ad = e.lam1 - s.xx;
    double vx, vd;
    if (std::abs(ax) >= std::abs(ad)) {
      vx = ax;
      vd = s.xv;
    } else {
      vx = s.xv;
      vd = ad;
    }
    double n = std::hypot(vx, vd);
    e.v1x = vx / n;
    e.v1d = vd / n;
  } else {
    if (s.xx >= s.vv) {
      e.v1x = 1.0;
      e.v1d = 0.0;
    } else {
      e.v1x = 0.0;
      e.v1d = 1.0;
    }
  }
  return e;
}

struct BehaviorModel {
  Label label = Label::NotCareful;
  std::size_t n_points = 0;
  double mean_x = 0.0, mean_xdot = 0.0;
  Sym2 cov;           // sample covariance (N-1)
  double lam1 = 0.0;  // principal eigenvalue
  double lam2 = 0.0;
  double v_xdot = 0.0;  // principal eigenvector, sign fixed so v_x > 0
  double v_x = 0.0;
  double Y = 0.0;  // eigen slope v_xdot / v_x
};

// Pair of class models; component 1 = NotCareful, component 2 = Careful.
struct ModelPair {
  BehaviorModel not_careful;
  BehaviorModel careful;

  const BehaviorModel& by_label(Label l) const {
    return l == Label::Careful ? careful : not_careful;
  }
};

// ---------------------------------------------------------------------------
// Phase-point extraction.
// ---------------------------------------------------------------------------

// Pairs each interior distance sample with its central-difference rate;
// the two endpoint samples carry one-sided rates and are excluded.
inline std::vector<PhasePoint> phase_points(const std::vector<double>& t,
                                            const std::vector<double>& dist) {
  if (dist.size() < 3) throw short_input_error("phase_points: need at least 3 samples");
  std::vector<double> xd = derivative(t, dist);
  std::vector<PhasePoint> pts;
  pts.reserve(dist.size() - 2);
  for (std::size_t i = 1; i + 1 < dist.size(); ++i) pts.push_back({dist[i], xd[i]});
  return pts;
}

// Which motion segment of a trial to analyze.
enum class MotionPhase { Reach, Transport };

inline std::string_view to_string(MotionPhase p) {
  return p == MotionPhase::Reach ? "reach" : "transport";
}

struct PhaseStream {
  std::vector<double> t;     // time stamps of the span (original clock)
  std::vector<double> dist;  // distance to the span's motion target
  Vec3 target;
};

// Contiguous sample span belonging to the motion phase, with distances taken
// to that phase's own target: the cup for reach, the handover point for
// transport. Transport includes the terminal handover dwell (the wrist's
// stationary wait), so online classification can keep integrating to the end
// of the recording.
inline PhaseStream extract_phase_stream(const Trajectory& traj, MotionPhase phase) {
  if (traj.t.size() != traj.p.size() || traj.t.size() != traj.phase.size()) {
    throw validation_error("trial '" + traj.id + "': inconsistent channel lengths");
  }
  auto wanted = [phase](Phase p) {
    if (phase == MotionPhase::Reach) return p == Phase::Reach;
    return p == Phase::Carry || p == Phase::Handover;
  };
  std::size_t begin = traj.size(), end = traj.size();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (wanted(traj.phase[i])) {
      begin = i;
      break;
    }
  }
  if (begin == traj.size()) {
    throw validation_error("trial '" + traj.id + "': no samples annotated with phase '" +
                           std::string(to_string(phase)) + "'");
  }
  for (end = begin; end < traj.size() && wanted(traj.phase[end]); ++end) {
  }
  PhaseStream out;
  out.target = phase == MotionPhase::Reach ? traj.cup_pos : traj.handover_pos;
  out.t.assign(traj.t.begin() + begin, traj.t.begin() + end);
  std::vector<Vec3> span(traj.p.begin() + begin, traj.p.begin() + end);
  out.dist = distance_series(span, out.target);
  return out;
}

// ---------------------------------------------------------------------------
// Fitting.
// ---------------------------------------------------------------------------

struct FitOptions {
  MotionPhase phase = MotionPhase::Transport;
  double filter_cutoff = 8.0;    // zero-phase low-pass on the distance rate
  double window_radius = 0.12;   // keep points with x <= radius (near-target fan)
  double degenerate_ratio = 4.0; // lam1/lam2 below this has no usable direction
};

// Fit one class Gaussian from pooled phase points.
inline BehaviorModel fit_behavior(const std::vector<PhasePoint>& pts, Label label,
                                  double degenerate_ratio = 4.0) {
  if (pts.size() < 10) {
    throw short_input_error("fit_behavior: need at least 10 phase points, got " +
                            std::to_string(pts.size()));
  }
  BehaviorModel m;
  m.label = label;
  m.n_points = pts.size();
  double n = static_cast<double>(pts.size());
  for (const auto& p : pts) {
    m.mean_x += p.x;
    m.mean_xdot += p.xdot;
  }
  m.mean_x /= n;
  m.mean_xdot /= n;
  for (const auto& p : pts) {
    double dx = p.x - m.mean_x;
    double dv = p.xdot - m.mean_xdot;
    m.cov.xx += dx * dx;
    m.cov.xv += dx * dv;
    m.cov.vv += dv * dv;
  }
  m.cov.xx /= (n - 1.0);
  m.cov.xv /= (n - 1.0);
  m.cov.vv /= (n - 1.0);

  EigenPair e = eigen_sym2(m.cov);
  m.lam1 = e.lam1;
  m.lam2 = e.lam2;
  constexpr double eps_num = 1e-15;
  if (e.lam1 <= 0.0 || e.lam1 / std::max(e.lam2, eps_num * std::max(1.0, e.lam1)) <
                           degenerate_ratio) {
    throw degenerate_fit_error("fit_behavior: covariance has no dominant direction (lam1=" +
                               format_double(e.lam1) + ", lam2=" + format_double(e.lam2) + ")");
  }
  double vx = e.v1x, vd = e.v1d;
  if (vx < 0.0) {
    vx = -vx;
    vd = -vd;
  }
  if (std::abs(vx) < 1e-6) {
    throw degenerate_fit_error("fit_behavior: principal direction is vertical (v_x ~ 0)");
  }
  m.v_x = vx;
  m.v_xdot = vd;
  m.Y = vd / vx;
  return m;
}

// Pool phase points of one label over the designated phase of every matching
// trial: distance to the phase target, rate low-passed with a zero-phase
// filter, and only the near-target window kept (the approach fan where the
// class slope lives; far samples carry rise-phase curvature).
inline std::vector<PhasePoint> pooled_phase_points(const Dataset& data, Label label,
                                                   const FitOptions& opt) {
  std::vector<PhasePoint> pool;
  for (const auto& traj : data) {
    if (label_of(traj.cup) != label) continue;
    PhaseStream s = extract_phase_stream(traj, opt.phase);
    if (s.dist.size() < 3) continue;
    double dt = s.t.size() > 1 ? s.t[1] - s.t[0] : 0.0;
    if (!(dt > 0.0)) throw validation_error("trial '" + traj.id + "': bad time base");
    FilterSpec spec{1.0 / dt, opt.filter_cutoff};
    std::vector<double> xd = lowpass_butter2(derivative(s.t, s.dist), spec, /*zero_phase=*/true);
    for (std::size_t i = 1; i + 1 < s.dist.size(); ++i) {
      if (s.dist[i] <= opt.window_radius) pool.push_back({s.dist[i], xd[i]});
    }
  }
  return pool;
}

// Fit both class models. Postcondition: the not-careful slope is steeper
// (|Y_nc| > |Y_c|) — careful motion approaches its target more gently.
inline ModelPair fit_pair(const Dataset& data, const FitOptions& opt = {}) {
  std::vector<PhasePoint> nc = pooled_phase_points(data, Label::NotCareful, opt);
  std::vector<PhasePoint> c = pooled_phase_points(data, Label::Careful, opt);
  if (nc.empty()) throw missing_label_error("fit_pair: no not_careful (empty cup) trials");
  if (c.empty()) throw missing_label_error("fit_pair: no careful (full cup) trials");
  ModelPair pair;
  pair.not_careful = fit_behavior(nc, Label::NotCareful, opt.degenerate_ratio);
  pair.careful = fit_behavior(c, Label::Careful, opt.degenerate_ratio);
  if (!(std::abs(pair.not_careful.Y) > std::abs(pair.careful.Y))) {
    throw validation_error("fit_pair: expected |Y| of not_careful to exceed careful (got " +
                           format_double(pair.not_careful.Y) + " vs " +
                           format_double(pair.careful.Y) + ")");
  }
  return pair;
}

// ---------------------------------------------------------------------------
// Model file: line-oriented versioned text, full round-trip precision.
// ---------------------------------------------------------------------------

namespace detail {

inline void serialize_model(std::string& out, const BehaviorModel& m) {
  out += "label ";
  out += to_string(m.label);
  out += "\n";
  out += "points " + std::to_string(m.n_points) + "\n";
  out += "mean " + format_double(m.mean_x) + " " + format_double(m.mean_xdot) + "\n";
  out += "cov " + format_double(m.cov.xx) + " " + format_double(m.cov.xv) + " " +
         format_double(m.cov.vv) + "\n";
  out += "eig " + format_double(m.lam1) + " " + format_double(m.lam2) + "\n";
  out += "vec " + format_double(m.v_x) + " " + format_double(m.v_xdot) + "\n";
  out += "slope " + format_double(m.Y) + "\n";
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> parts;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) parts.push_back(tok);
  return parts;
}

}  // namespace detail

inline std::string serialize_model_pair(const ModelPair& pair) {
  std::string out = "behavior-model v1\n";
  detail::serialize_model(out, pair.not_careful);
  detail::serialize_model(out, pair.careful);
  return out;
}

inline void save_model(const ModelPair& pair, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw error("cannot open model file for writing: " + path);
  f << serialize_model_pair(pair);
  if (!f) throw error("failed writing model file: " + path);
}

// Parse and revalidate: the stored eigenpair must match a fresh
// decomposition of the stored covariance within 1e-6.
inline ModelPair parse_model_pair(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) {
      throw parse_error(std::string("model file truncated: missing ") + what + " (line " +
                        std::to_string(lineno + 1) + ")");
    }
    ++lineno;
    return detail::split_ws(line);
  };
  auto header = next_line("header");
  if (header.size() != 2 || header[0] != "behavior-model" || header[1] != "v1") {
    throw parse_error("model file: unrecognized header");
  }
  auto read_model = [&]() {
    BehaviorModel m;
    auto lab = next_line("label");
    if (lab.size() != 2 || lab[0] != "label") throw parse_error("model file: expected 'label'");
    m.label = label_from_string(lab[1]);
    auto pts = next_line("points");
    if (pts.size() != 2 || pts[0] != "points") throw parse_error("model file: expected 'points'");
    m.n_points = static_cast<std::size_t>(parse_long(pts[1]));
    auto mean = next_line("mean");
    if (mean.size() != 3 || mean[0] != "mean") throw parse_error("model file: expected 'mean'");
    m.mean_x = parse_double(mean[1]);
    m.mean_xdot = parse_double(mean[2]);
    auto cov = next_line("cov");
    if (cov.size() != 4 || cov[0] != "cov") throw parse_error("model file: expected 'cov'");
    m.cov.xx = parse_double(cov[1]);
    m.cov.xv = parse_double(cov[2]);
    m.cov.vv = parse_double(cov[3]);
    auto eig = next_line("eig");
    if (eig.size() != 3 || eig[0] != "eig") throw parse_error("model file: expected 'eig'");
    m.lam1 = parse_double(eig[1]);
    m.lam2 = parse_double(eig[2]);
    auto vec = next_line("vec");
    if (vec.size() != 3 || vec[0] != "vec") throw parse_error("model file: expected 'vec'");
    m.v_x = parse_double(vec[1]);
    m.v_xdot = parse_double(vec[2]);
    auto slope = next_line("slope");
    if (slope.size() != 2 || slope[0] != "slope") throw parse_error("model file: expected 'slope'");
    m.Y = parse_double(slope[1]);

    // Revalidate against a fresh decomposition of the stored covariance.
    EigenPair e = eigen_sym2(m.cov);
    double scale = std::max({1.0, std::abs(e.lam1), std::abs(e.lam2)});
    if (std::abs(e.lam1 - m.lam1) > 1e-6 * scale || std::abs(e.lam2 - m.lam2) > 1e-6 * scale) {
      throw validation_error("model file: stored eigenvalues do not match covariance");
    }
    double vres_x = m.cov.xx * m.v_x + m.cov.xv * m.v_xdot - m.lam1 * m.v_x;
    double vres_d = m.cov.xv * m.v_x + m.cov.vv * m.v_xdot - m.lam1 * m.v_xdot;
    if (std::hypot(vres_x, vres_d) > 1e-6 * scale) {
      throw validation_error("model file: stored eigenvector is not an eigenvector");
    }
    if (std::abs(m.Y - m.v_xdot / m.v_x) > 1e-9 * std::max(1.0, std::abs(m.Y))) {
      throw validation_error("model file: stored slope does not match eigenvector");
    }
    return m;
  };
  ModelPair pair;
  pair.not_careful = read_model();
  pair.careful = read_model();
  if (pair.not_careful.label != Label::NotCareful || pair.careful.label != Label::Careful) {
    throw validation_error("model file: expected not_careful then careful");
  }
  return pair;
}

inline ModelPair load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw error("cannot open model file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_model_pair(ss.str());
}

}  // namespace handover
