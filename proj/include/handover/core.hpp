#pragma once
// Core vocabulary shared by every module: vectors, trajectory containers,
// label/phase enums, the error taxonomy, deterministic RNG, and number
// formatting helpers.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace handover {

inline constexpr std::string_view kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Error taxonomy. Every failure surfaced by the library derives from `error`;
// the CLI maps each class to a distinct exit code.
// ---------------------------------------------------------------------------

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad arguments / invalid configuration (e.g. cutoff >= Nyquist).
struct invalid_argument_error : error {
  using error::error;
};

// Too few samples/points to perform the requested operation.
struct short_input_error : error {
  using error::error;
};

// Malformed text input (CSV rows, model files); message carries a line number
// when one is known.
struct parse_error : error {
  using error::error;
};

// Structurally well-formed data that violates a documented invariant
// (model revalidation failures, unbalanced blocks, missing phase spans...).
struct validation_error : error {
  using error::error;
};

// A dataset lacks one of the two required class labels.
struct missing_label_error : validation_error {
  using validation_error::validation_error;
};

// A fitted covariance has no usable principal direction.
struct degenerate_fit_error : validation_error {
  using validation_error::validation_error;
};

// Simulated human never triggered the handover.
struct timeout_error : error {
  using error::error;
};

// ---------------------------------------------------------------------------
// Small 3-vector (the simulator and trajectories are Cartesian points).
// ---------------------------------------------------------------------------

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
  friend Vec3 operator*(Vec3 v, double s) { return s * v; }
  friend bool operator==(Vec3 a, Vec3 b) { return a.x == b.x && a.y == b.y && a.z == b.z; }
};

inline double norm(Vec3 v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

inline Vec3 normalized(Vec3 v) {
  double n = norm(v);
  if (n <= 0.0) throw invalid_argument_error("cannot normalize a zero vector");
  return {v.x / n, v.y / n, v.z / n};
}

// ---------------------------------------------------------------------------
// Labels and phases.
// ---------------------------------------------------------------------------

// Cup content drives the ground-truth motion class.
enum class Cup { Empty, Full };

// Motion class the classifier reasons about. Index order matters everywhere:
// component 1 = NotCareful, component 2 = Careful.
enum class Label { NotCareful, Careful };

inline Label label_of(Cup c) { return c == Cup::Full ? Label::Careful : Label::NotCareful; }
inline Cup cup_of(Label l) { return l == Label::Careful ? Cup::Full : Cup::Empty; }

// Per-sample annotation of a recorded trial.
enum class Phase { Pre, Reach, Carry, Handover };

inline std::string_view to_string(Cup c) { return c == Cup::Full ? "full" : "empty"; }
inline std::string_view to_string(Label l) {
  return l == Label::Careful ? "careful" : "not_careful";
}
inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Pre: return "pre";
    case Phase::Reach: return "reach";
    case Phase::Carry: return "carry";
    case Phase::Handover: return "handover";
  }
  return "pre";
}

inline Cup cup_from_string(std::string_view s) {
  if (s == "full") return Cup::Full;
  if (s == "empty") return Cup::Empty;
  throw parse_error("unknown cup state: " + std::string(s));
}
inline Label label_from_string(std::string_view s) {
  if (s == "careful") return Label::Careful;
  if (s == "not_careful") return Label::NotCareful;
  throw parse_error("unknown label: " + std::string(s));
}
inline Phase phase_from_string(std::string_view s) {
  if (s == "pre") return Phase::Pre;
  if (s == "reach") return Phase::Reach;
  if (s == "carry") return Phase::Carry;
  if (s == "handover") return Phase::Handover;
  throw parse_error("unknown phase: " + std::string(s));
}

// ---------------------------------------------------------------------------
// Trajectory: one recorded (or synthesized) trial of the human wrist.
// ---------------------------------------------------------------------------

struct Trajectory {
  std::string id;
  std::vector<double> t;      // seconds, strictly increasing, uniform rate
  std::vector<Vec3> p;        // wrist positions, meters
  std::vector<Phase> phase;   // per-sample phase annotation
  Cup cup = Cup::Empty;       // ground truth content
  std::string condition = "neu";  // robot condition tag carried by the CSV schema
  Vec3 cup_pos;               // reach target (where the cup was grasped)
  Vec3 handover_pos;          // transport target (where the wrist came to rest)

  std::size_t size() const { return t.size(); }
};

using Dataset = std::vector<Trajectory>;

// ---------------------------------------------------------------------------
// Deterministic RNG. std::mt19937_64 is fully specified by the standard;
// normal deviates use an explicit Box-Muller transform because
// std::normal_distribution's algorithm is implementation-defined and the
// toolkit promises byte-identical outputs for equal seeds.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Stable derivation of per-item seeds from a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (0xD1B54A32D192ED03ull * (index + 1));
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; one deviate per call, partner discarded,
  // so the draw sequence is a pure function of the engine stream.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]: keeps the log finite
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi_v<double> * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Normal clamped to mean +/- 3 sd (tails folded onto the bounds).
  double normal_clamped3(double mean, double sd) {
    double v = normal(mean, sd);
    double lo = mean - 3.0 * sd, hi = mean + 3.0 * sd;
    return v < lo ? lo : (v > hi ? hi : v);
  }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

// ---------------------------------------------------------------------------
// Number formatting: shortest representation that round-trips exactly.
// All serialized artifacts (CSV, model files, reports) use this, which makes
// byte-identity equivalent to value-identity.
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw error("number formatting failed");
  return std::string(buf.data(), ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw parse_error("not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline long parse_long(std::string_view s) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw parse_error("not an integer: '" + std::string(s) + "'");
  }
  return v;
}

// Nearest-rank percentile (1-based rank ceil(p/100 * n)) of an unsorted copy.
inline double percentile_nearest_rank(std::vector<double> v, double p) {
  if (v.empty()) throw invalid_argument_error("percentile of empty set");
  if (p < 0.0 || p > 100.0) throw invalid_argument_error("percentile out of [0,100]");
  std::sort(v.begin(), v.end());
  std::size_t rank = p <= 0.0 ? 1 : static_cast<std::size_t>(std::ceil(p / 100.0 * v.size()));
  if (rank < 1) rank = 1;
  if (rank > v.size()) rank = v.size();
  return v[rank - 1];
}

}  // namespace handover
