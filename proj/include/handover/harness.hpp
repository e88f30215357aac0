#pragma once
// Dataset ingestion, report emission, and experiment orchestration. All
// serialized numbers use the shortest exact representation, so identical
// values give identical bytes; reports carry no timestamps or environment
// strings, making whole pipelines reproducible byte-for-byte.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "handover/behavior.hpp"
#include "handover/classifier.hpp"
#include "handover/core.hpp"
#include "handover/robosim.hpp"
#include "handover/synth.hpp"

namespace handover {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Trial CSV: trial_id,t,x,y,z,phase,cup,condition (+ two annotation columns
// so trials round-trip with their targets).
// ---------------------------------------------------------------------------

inline constexpr std::string_view kTrialCsvHeader =
    "trial_id,t,x,y,z,phase,cup,condition,cup_target,handover_target";

inline void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw error("cannot open dataset for writing: " + path);
  f << kTrialCsvHeader << "\n";
  for (const auto& tr : data) {
    std::string cup_target = format_double(tr.cup_pos.x) + ";" + format_double(tr.cup_pos.y) +
                             ";" + format_double(tr.cup_pos.z);
    std::string ho_target = format_double(tr.handover_pos.x) + ";" +
                            format_double(tr.handover_pos.y) + ";" +
                            format_double(tr.handover_pos.z);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      f << tr.id << ',' << format_double(tr.t[i]) << ',' << format_double(tr.p[i].x) << ','
        << format_double(tr.p[i].y) << ',' << format_double(tr.p[i].z) << ','
        << to_string(tr.phase[i]) << ',' << to_string(tr.cup) << ',' << tr.condition << ','
        << cup_target << ',' << ho_target << "\n";
    }
  }
  if (!f) throw error("failed writing dataset: " + path);
}

struct RejectedTrial {
  std::string id;
  std::string reason;
};

struct LoadResult {
  Dataset data;
  std::vector<RejectedTrial> rejected;
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline Vec3 parse_vec3_semi(const std::string& s, std::size_t lineno) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == ';') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.size() != 3) {
    throw parse_error("line " + std::to_string(lineno) + ": bad vector '" + s + "'");
  }
  return {parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2])};
}

}  // namespace detail

// Load a trial CSV. Structural problems in a row abort with a parse error
// carrying the line number; per-trial invariant violations (non-monotone
// time, inconsistent labels) reject that trial with a reason instead.
inline LoadResult load_trials(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw error("cannot open dataset: " + path);
  std::string line;
  if (!std::getline(f, line)) throw parse_error("empty dataset file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTrialCsvHeader) {
    throw parse_error(path + ": unrecognized header (expected '" + std::string(kTrialCsvHeader) +
                      "')");
  }

  LoadResult out;
  Trajectory cur;
  std::string bad_reason;
  auto flush = [&]() {
    if (cur.id.empty()) return;
    if (!bad_reason.empty()) {
      out.rejected.push_back({cur.id, bad_reason});
    } else if (cur.size() < 2) {
      out.rejected.push_back({cur.id, "fewer than 2 samples"});
    } else {
      out.data.push_back(cur);
    }
    cur = Trajectory{};
    bad_reason.clear();
  };

  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = detail::split_csv(line);
    if (cols.size() != 10) {
      throw parse_error("line " + std::to_string(lineno) + ": expected 10 columns, got " +
                        std::to_string(cols.size()));
    }
    double t, x, y, z;
    Phase ph;
    Cup cup;
    try {
      t = parse_double(cols[1]);
      x = parse_double(cols[2]);
      y = parse_double(cols[3]);
      z = parse_double(cols[4]);
      ph = phase_from_string(cols[5]);
      cup = cup_from_string(cols[6]);
    } catch (const parse_error& e) {
      throw parse_error("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (cols[7] != "neu" && cols[7] != "exp") {
      throw parse_error("line " + std::to_string(lineno) + ": unknown condition '" + cols[7] +
                        "'");
    }
    if (cols[0] != cur.id) {
      flush();
      cur.id = cols[0];
      cur.cup = cup;
      cur.condition = cols[7];
      cur.cup_pos = detail::parse_vec3_semi(cols[8], lineno);
      cur.handover_pos = detail::parse_vec3_semi(cols[9], lineno);
    } else {
      if (cup != cur.cup && bad_reason.empty()) bad_reason = "inconsistent cup label";
    }
    if (!cur.t.empty() && t <= cur.t.back() && bad_reason.empty()) {
      bad_reason = "non-monotone time at line " + std::to_string(lineno);
    }
    cur.t.push_back(t);
    cur.p.push_back({x, y, z});
    cur.phase.push_back(ph);
  }
  flush();
  return out;
}

// ---------------------------------------------------------------------------
// Report serialization.
// ---------------------------------------------------------------------------

inline ordered_json eval_report_json(const EvalReport& rep) {
  ordered_json j;
  j["schema"] = "eval-report/v1";
  j["phase"] = std::string(to_string(rep.phase));
  ordered_json labels;
  for (Label lab : {Label::NotCareful, Label::Careful}) {
    const LabelStats& st = rep.per_label.at(lab);
    ordered_json s;
    s["n"] = st.n;
    s["correct"] = st.correct;
    s["wrong"] = st.wrong;
    s["undecided"] = st.undecided;
    s["accuracy"] = st.accuracy;
    s["p97_correct_step"] = st.p97_correct_step;
    s["decided_steps"] = st.decided_steps;
    const DecidedCurve& c = rep.curves.at(lab);
    s["decided_fraction"] = c.fraction;
    s["decided_fraction_ci95"] = c.ci_half_width;
    labels[std::string(to_string(lab))] = std::move(s);
  }
  j["labels"] = std::move(labels);
  ordered_json trials = ordered_json::array();
  for (const auto& tr : rep.trials) {
    ordered_json t;
    t["id"] = tr.id;
    t["truth"] = std::string(to_string(tr.truth));
    t["predicted"] = tr.predicted ? std::string(to_string(*tr.predicted)) : "undecided";
    t["decided_step"] = tr.predicted ? static_cast<long long>(tr.decided_step) : -1;
    t["stream_len"] = tr.stream_len;
    t["margin_s"] = tr.predicted ? tr.margin : -1.0;
    trials.push_back(std::move(t));
  }
  j["trials"] = std::move(trials);
  return j;
}

inline ordered_json trial_metrics_json(const TrialMetrics& m) {
  ordered_json j;
  j["cup"] = std::string(to_string(m.cup));
  j["condition"] = m.condition;
  j["wait_time_s"] = m.wait_time;
  j["busy_time_s"] = m.busy_time;
  j["total_time_s"] = m.total_time;
  j["spill"] = m.spill;
  j["classifier_decision"] =
      m.classifier_decision ? std::string(to_string(*m.classifier_decision)) : "none";
  j["classifier_decision_time_s"] =
      m.classifier_decision_time ? *m.classifier_decision_time : -1.0;
  return j;
}

inline ordered_json block_metrics_json(const BlockMetrics& b) {
  ordered_json j;
  j["schema"] = "block-metrics/v1";
  j["total_time_s"] = b.total_time;
  j["robot_busy_total_s"] = b.robot_busy_total;
  j["net_human_time_s"] = b.net_human_time;
  j["spills"] = b.spills;
  ordered_json trials = ordered_json::array();
  for (const auto& t : b.trials) trials.push_back(trial_metrics_json(t));
  j["trials"] = std::move(trials);
  return j;
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw error("cannot open for writing: " + path);
  f << content;
  if (!f) throw error("failed writing: " + path);
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw error("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_json(const std::string& path, const ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

// Belief trace CSV for one classified stream.
inline std::string belief_trace_csv(const BeliefTrace& tr) {
  std::string out = "step,t,b_not_careful,b_careful,X,err\n";
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    out += std::to_string(i) + "," + format_double(tr.t[i]) + "," +
           format_double(tr.b_not_careful[i]) + "," + format_double(tr.b_careful[i]) + ",";
    out += std::isnan(tr.X[i]) ? "" : format_double(tr.X[i]);
    out += ",";
    out += std::isnan(tr.err[i]) ? "" : format_double(tr.err[i]);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregate report tables (plot-ready CSVs).
// ---------------------------------------------------------------------------

// accuracy / undecided / latency percentile table per label.
inline std::string accuracy_table_csv(const EvalReport& rep) {
  std::string out = "label,n,correct,wrong,undecided,accuracy,p97_correct_step\n";
  for (Label lab : {Label::NotCareful, Label::Careful}) {
    const LabelStats& st = rep.per_label.at(lab);
    out += std::string(to_string(lab)) + "," + std::to_string(st.n) + "," +
           std::to_string(st.correct) + "," + std::to_string(st.wrong) + "," +
           std::to_string(st.undecided) + "," + format_double(st.accuracy) + "," +
           format_double(st.p97_correct_step) + "\n";
  }
  return out;
}

// step-indexed decided-fraction curves (mean and CI half width per label).
inline std::string decision_curve_csv(const EvalReport& rep) {
  std::size_t len = 0;
  for (const auto& [lab, c] : rep.curves) len = std::max(len, c.fraction.size());
  std::string out =
      "step,not_careful_fraction,not_careful_ci95,careful_fraction,careful_ci95\n";
  const DecidedCurve& nc = rep.curves.at(Label::NotCareful);
  const DecidedCurve& cc = rep.curves.at(Label::Careful);
  for (std::size_t s = 0; s < len; ++s) {
    auto cell = [&](const std::vector<double>& v) {
      return s < v.size() ? format_double(v[s]) : std::string();
    };
    out += std::to_string(s) + "," + cell(nc.fraction) + "," + cell(nc.ci_half_width) + "," +
           cell(cc.fraction) + "," + cell(cc.ci_half_width) + "\n";
  }
  return out;
}

// busy/net-time comparison across simulated conditions.
inline std::string net_time_csv(const std::vector<std::pair<std::string, BlockMetrics>>& blocks) {
  std::string out = "block,total_time_s,robot_busy_total_s,net_human_time_s,spills\n";
  for (const auto& [name, b] : blocks) {
    out += name + "," + format_double(b.total_time) + "," + format_double(b.robot_busy_total) +
           "," + format_double(b.net_human_time) + "," + std::to_string(b.spills) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline orchestration (shared by the CLI and the end-to-end tests).
// ---------------------------------------------------------------------------

struct PipelineConfig {
  SynthConfig synth;              // synth.seed is the *training* seed
  std::uint64_t eval_seed = 1;    // evaluation dataset seed
  std::size_t n_train = 100;      // trials per label
  std::size_t n_eval = 200;
  ClassifierConfig classifier;
  FitOptions fit;
  TaskGeometry geometry;
  std::string out_dir;
};

// synth -> fit -> classify -> simulate -> report, writing every artifact
// under cfg.out_dir. Returns the evaluation report.
inline EvalReport run_pipeline(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.out_dir.empty()) throw invalid_argument_error("pipeline: out_dir required");
  fs::create_directories(cfg.out_dir);
  auto path = [&](const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); };

  // synth
  Dataset train = synth_dataset(cfg.synth, cfg.n_train);
  SynthConfig eval_cfg = cfg.synth;
  eval_cfg.seed = cfg.eval_seed;
  Dataset eval = synth_dataset(eval_cfg, cfg.n_eval);
  save_dataset(train, path("train.csv"));
  save_dataset(eval, path("eval.csv"));

  // fit
  ModelPair models = fit_pair(train, cfg.fit);
  save_model(models, path("models.txt"));

  // classify
  EvalReport rep = evaluate(eval, models, cfg.classifier, MotionPhase::Transport);
  write_json(path("eval_report.json"), eval_report_json(rep));

  // simulate: one block per condition, reusing the first four eval trials
  // (2 per label) as the human streams.
  auto pick_human = [&](Cup cup, std::size_t nth) -> const Trajectory& {
    std::size_t seen = 0;
    for (const auto& tr : eval) {
      if (tr.cup == cup && seen++ == nth) return tr;
    }
    throw validation_error("pipeline: not enough trials for the simulation block");
  };
  std::vector<std::pair<std::string, BlockMetrics>> blocks;
  for (const char* cond : {"neu", "exp"}) {
    BlockSetup block;
    for (std::size_t i = 0; i < 2; ++i) {
      for (Cup cup : {Cup::Full, Cup::Empty}) {
        TrialSetup ts;
        ts.cup = cup;
        if (std::string_view(cond) == "neu") {
          ts.controller = NeutralSpec{};
        } else {
          ts.controller = default_expressive_spec();
        }
        ts.human = pick_human(cup, i);
        ts.geometry = geometry_at(ts.human.handover_pos, cfg.geometry);
        ts.models = &models;
        ts.classifier_cfg = cfg.classifier;
        block.trials.push_back(std::move(ts));
      }
    }
    BlockMetrics bm = run_block(block);
    write_json(path(std::string("block_") + cond + ".json"), block_metrics_json(bm));
    blocks.emplace_back(cond, std::move(bm));
  }

  // report
  write_text(path("accuracy_table.csv"), accuracy_table_csv(rep));
  write_text(path("decision_curves.csv"), decision_curve_csv(rep));
  write_text(path("net_time.csv"), net_time_csv(blocks));
  return rep;
}

}  // namespace handover
