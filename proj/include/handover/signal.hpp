#pragma once
// 1-D signal utilities: 2nd-order Butterworth low-pass (causal and
// zero-phase), finite-difference derivative, distance series, linear
// resampling, and profile aggregation.

#include <cmath>
#include <numbers>
#include <vector>

#include "handover/core.hpp"

namespace handover {

struct FilterSpec {
  double fs = 120.0;     // sample rate, Hz
  double cutoff = 8.0;   // -3 dB corner, Hz
};

struct Biquad {
  // y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
  double b0, b1, b2, a1, a2;
};

// Bilinear transform with frequency prewarping of the analog 2nd-order
// Butterworth prototype. Exact discrete magnitude:
//   |H(e^{jw})|^2 = 1 / (1 + (tan(w/2)/K)^4),  K = tan(pi * cutoff / fs).
inline Biquad butter2_lowpass(const FilterSpec& spec) {
  if (!(spec.fs > 0.0)) throw invalid_argument_error("filter: fs must be positive");
  if (!(spec.cutoff > 0.0)) throw invalid_argument_error("filter: cutoff must be positive");
  if (spec.cutoff >= spec.fs / 2.0) {
    throw invalid_argument_error("filter: cutoff must lie below the Nyquist rate");
  }
  double K = std::tan(std::numbers::pi_v<double> * spec.cutoff / spec.fs);
  double norm = 1.0 + std::numbers::sqrt2_v<double> * K + K * K;
  Biquad q{};
  q.b0 = K * K / norm;
  q.b1 = 2.0 * q.b0;
  q.b2 = q.b0;
  q.a1 = 2.0 * (K * K - 1.0) / norm;
  q.a2 = (1.0 - std::numbers::sqrt2_v<double> * K + K * K) / norm;
  return q;
}

// Number of samples the filter needs to forget its initial state.
inline std::size_t filter_warmup(const FilterSpec& spec) {
  return static_cast<std::size_t>(std::ceil(spec.fs / spec.cutoff));
}

namespace detail {

// Direct form II transposed, state initialized to the steady-state response
// for a constant input equal to the first sample (no startup transient on
// already-settled signals).
inline std::vector<double> biquad_causal(const std::vector<double>& x, const Biquad& q) {
  std::vector<double> y(x.size());
  if (x.empty()) return y;
  double u0 = x.front();
  double z1 = u0 * (1.0 - q.b0);
  double z2 = u0 * (q.b2 - q.a2);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double out = q.b0 * x[i] + z1;
    z1 = q.b1 * x[i] - q.a1 * out + z2;
    z2 = q.b2 * x[i] - q.a2 * out;
    y[i] = out;
  }
  return y;
}

}  // namespace detail

// Low-pass the series. zero_phase=false runs a single causal pass (online
// use); zero_phase=true runs forward then reversed (offline analysis, no lag,
// squared magnitude response).
inline std::vector<double> lowpass_butter2(const std::vector<double>& x, const FilterSpec& spec,
                                           bool zero_phase) {
  Biquad q = butter2_lowpass(spec);
  std::size_t need = 3 * filter_warmup(spec);
  if (x.size() < need) {
    throw short_input_error("filter: need at least " + std::to_string(need) + " samples, got " +
                            std::to_string(x.size()));
  }
  std::vector<double> y = detail::biquad_causal(x, q);
  if (zero_phase) {
    std::reverse(y.begin(), y.end());
    y = detail::biquad_causal(y, q);
    std::reverse(y.begin(), y.end());
  }
  return y;
}

// Finite-difference derivative: central differences inside, one-sided at the
// ends. Requires uniformly spaced, strictly increasing time stamps.
inline std::vector<double> derivative(const std::vector<double>& t, const std::vector<double>& v) {
  if (t.size() != v.size()) throw invalid_argument_error("derivative: length mismatch");
  std::size_t n = v.size();
  if (n < 2) throw short_input_error("derivative: need at least 2 samples");
  double dt = t[1] - t[0];
  if (!(dt > 0.0)) throw invalid_argument_error("derivative: time must be strictly increasing");
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double step = t[i + 1] - t[i];
    if (std::abs(step - dt) > 1e-9) {
      throw invalid_argument_error("derivative: non-uniform sampling");
    }
  }
  std::vector<double> d(n);
  d[0] = (v[1] - v[0]) / dt;
  d[n - 1] = (v[n - 1] - v[n - 2]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dt);
  return d;
}

// Convenience overload for a known uniform rate.
inline std::vector<double> derivative(const std::vector<double>& v, double dt) {
  if (!(dt > 0.0)) throw invalid_argument_error("derivative: dt must be positive");
  std::size_t n = v.size();
  if (n < 2) throw short_input_error("derivative: need at least 2 samples");
  std::vector<double> d(n);
  d[0] = (v[1] - v[0]) / dt;
  d[n - 1] = (v[n - 1] - v[n - 2]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dt);
  return d;
}

// Euclidean distance of each trajectory sample to a fixed point.
inline std::vector<double> distance_series(const std::vector<Vec3>& p, Vec3 target) {
  std::vector<double> d(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) d[i] = distance(p[i], target);
  return d;
}

// Linear resampling onto n_out equally spaced indices; endpoints are
// reproduced exactly.
inline std::vector<double> resample(const std::vector<double>& v, std::size_t n_out) {
  if (v.size() < 2) throw short_input_error("resample: need at least 2 input samples");
  if (n_out < 2) throw invalid_argument_error("resample: need at least 2 output samples");
  std::vector<double> out(n_out);
  out.front() = v.front();
  out.back() = v.back();
  double scale = static_cast<double>(v.size() - 1) / static_cast<double>(n_out - 1);
  for (std::size_t j = 1; j + 1 < n_out; ++j) {
    double pos = static_cast<double>(j) * scale;
    std::size_t i = static_cast<std::size_t>(pos);
    if (i >= v.size() - 1) i = v.size() - 2;
    double frac = pos - static_cast<double>(i);
    out[j] = v[i] + frac * (v[i + 1] - v[i]);
  }
  return out;
}

struct AggregateProfile {
  std::vector<double> mean;
  std::vector<double> sd;  // population standard deviation (divide by N)
};

// Pointwise ensemble mean and population SD of equally long profiles.
inline AggregateProfile aggregate_profiles(const std::vector<std::vector<double>>& profiles) {
  if (profiles.empty()) throw invalid_argument_error("aggregate: empty profile set");
  std::size_t n = profiles.front().size();
  for (const auto& p : profiles) {
    if (p.size() != n) throw validation_error("aggregate: mismatched profile lengths");
  }
  if (n == 0) throw invalid_argument_error("aggregate: zero-length profiles");
  AggregateProfile out;
  out.mean.assign(n, 0.0);
  out.sd.assign(n, 0.0);
  double m = static_cast<double>(profiles.size());
  for (const auto& p : profiles) {
    for (std::size_t i = 0; i < n; ++i) out.mean[i] += p[i];
  }
  for (std::size_t i = 0; i < n; ++i) out.mean[i] /= m;
  for (const auto& p : profiles) {
    for (std::size_t i = 0; i < n; ++i) {
      double d = p[i] - out.mean[i];
      out.sd[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) out.sd[i] = std::sqrt(out.sd[i] / m);
  return out;
}

}  // namespace handover
