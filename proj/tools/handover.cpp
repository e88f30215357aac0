// Command-line front end: synthesize datasets, fit behavior models, classify
// trial streams, simulate robot handover blocks, and produce the aggregate
// report tables. Exit codes: 0 success, 64 usage, 65 malformed input,
// 66 missing input file, 67 model/validation failure, 70 internal error.

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "handover/harness.hpp"

namespace fs = std::filesystem;
using namespace handover;

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitParse = 65;
constexpr int kExitMissingInput = 66;
constexpr int kExitModel = 67;
constexpr int kExitInternal = 70;

struct missing_input : std::runtime_error {
  explicit missing_input(const std::string& path)
      : std::runtime_error("input file not found: " + path) {}
};

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw missing_input(path);
}

MotionPhase parse_phase_flag(const std::string& s) {
  if (s == "transport") return MotionPhase::Transport;
  if (s == "reach") return MotionPhase::Reach;
  throw invalid_argument_error("--phase must be 'transport' or 'reach'");
}

struct SynthArgs {
  std::string out;
  std::uint64_t seed = 0;
  std::size_t n_per_label = 100;
  double noise_sd = 4e-5;
};

struct FitArgs {
  std::string data, out;
  std::string phase = "transport";
  double window_radius = 0.12;
  double filter_cutoff = 8.0;
  double degenerate_ratio = 4.0;
};

struct ClassifyArgs {
  std::string data, model, out_dir;
  std::string phase = "transport";
  std::string rule = "projected";
  double epsilon = 0.14;
  double threshold = 0.99;
  std::string trace_id;  // optionally dump one trial's belief trace
};

struct SimulateArgs {
  std::string human, out_dir, model;
  double v_const = 0.25;
  double pour_dwell = 2.0;
};

struct ReportArgs {
  std::string out_dir;
  std::uint64_t train_seed = 0;
  std::uint64_t eval_seed = 1;
  std::size_t n_train = 100;
  std::size_t n_eval = 200;
};

int cmd_synth(const SynthArgs& a) {
  SynthConfig cfg;
  cfg.seed = a.seed;
  cfg.noise_sd = a.noise_sd;
  Dataset data = synth_dataset(cfg, a.n_per_label);
  save_dataset(data, a.out);
  std::cout << "wrote " << data.size() << " trials to " << a.out << "\n";
  return 0;
}

int cmd_fit(const FitArgs& a) {
  require_file(a.data);
  LoadResult loaded = load_trials(a.data);
  for (const auto& rej : loaded.rejected) {
    std::cerr << "rejected trial '" << rej.id << "': " << rej.reason << "\n";
  }
  FitOptions opt;
  opt.phase = parse_phase_flag(a.phase);
  opt.window_radius = a.window_radius;
  opt.filter_cutoff = a.filter_cutoff;
  opt.degenerate_ratio = a.degenerate_ratio;
  ModelPair models = fit_pair(loaded.data, opt);
  save_model(models, a.out);
  std::cout << "fit behavior models: not_careful slope " << format_double(models.not_careful.Y)
            << ", careful slope " << format_double(models.careful.Y) << " -> " << a.out << "\n";
  return 0;
}

int cmd_classify(const ClassifyArgs& a) {
  require_file(a.data);
  require_file(a.model);
  LoadResult loaded = load_trials(a.data);
  for (const auto& rej : loaded.rejected) {
    std::cerr << "rejected trial '" << rej.id << "': " << rej.reason << "\n";
  }
  ModelPair models = load_model(a.model);
  ClassifierConfig cfg;
  cfg.epsilon = a.epsilon;
  cfg.decision_threshold = a.threshold;
  cfg.update_rule = a.rule == "literal" ? UpdateRule::PaperLiteral : UpdateRule::ErrorProjected;
  MotionPhase phase = parse_phase_flag(a.phase);

  fs::create_directories(a.out_dir);
  auto out_path = [&](const std::string& name) { return (fs::path(a.out_dir) / name).string(); };

  EvalReport rep = evaluate(loaded.data, models, cfg, phase);
  write_json(out_path("eval_report.json"), eval_report_json(rep));
  write_text(out_path("accuracy_table.csv"), accuracy_table_csv(rep));
  write_text(out_path("decision_curves.csv"), decision_curve_csv(rep));

  if (!a.trace_id.empty()) {
    bool found = false;
    for (const auto& tr : loaded.data) {
      if (tr.id != a.trace_id) continue;
      PhaseStream stream = extract_phase_stream(tr, phase);
      OnlineResult r = classify_online(stream.dist, models, cfg);
      write_text(out_path("trace_" + tr.id + ".csv"), belief_trace_csv(r.trace));
      found = true;
    }
    if (!found) throw validation_error("trial id not in dataset: " + a.trace_id);
  }
  for (Label lab : {Label::NotCareful, Label::Careful}) {
    const LabelStats& st = rep.per_label.at(lab);
    std::cout << to_string(lab) << ": " << st.correct << "/" << st.n << " correct, "
              << st.undecided << " undecided\n";
  }
  return 0;
}

int cmd_simulate(const SimulateArgs& a) {
  require_file(a.human);
  LoadResult loaded = load_trials(a.human);
  ModelPair models;
  if (!a.model.empty()) {
    require_file(a.model);
    models = load_model(a.model);
  }

  TaskGeometry base;
  base.pour_dwell = a.pour_dwell;
  auto pick_human = [&](Cup cup, std::size_t nth) -> const Trajectory& {
    std::size_t seen = 0;
    for (const auto& tr : loaded.data) {
      if (tr.cup == cup && seen++ == nth) return tr;
    }
    throw validation_error("simulate: need at least 2 trials per cup state in " + a.human);
  };

  fs::create_directories(a.out_dir);
  std::vector<std::pair<std::string, BlockMetrics>> blocks;
  for (const char* cond : {"neu", "exp"}) {
    BlockSetup block;
    for (std::size_t i = 0; i < 2; ++i) {
      for (Cup cup : {Cup::Full, Cup::Empty}) {
        TrialSetup ts;
        ts.cup = cup;
        if (std::string_view(cond) == "neu") {
          NeutralSpec spec;
          spec.v_const = a.v_const;
          ts.controller = spec;
        } else {
          ts.controller = default_expressive_spec();
        }
        ts.human = pick_human(cup, i);
        ts.geometry = geometry_at(ts.human.handover_pos, base);
        if (!a.model.empty()) ts.models = &models;
        block.trials.push_back(std::move(ts));
      }
    }
    BlockMetrics bm = run_block(block);
    write_json((fs::path(a.out_dir) / (std::string("block_") + cond + ".json")).string(),
               block_metrics_json(bm));
    std::cout << cond << ": total " << format_double(bm.total_time) << " s, robot busy "
              << format_double(bm.robot_busy_total) << " s, net human "
              << format_double(bm.net_human_time) << " s, spills " << bm.spills << "\n";
    blocks.emplace_back(cond, std::move(bm));
  }
  write_text((fs::path(a.out_dir) / "net_time.csv").string(), net_time_csv(blocks));
  return 0;
}

int cmd_report(const ReportArgs& a) {
  PipelineConfig cfg;
  cfg.synth.seed = a.train_seed;
  cfg.eval_seed = a.eval_seed;
  cfg.n_train = a.n_train;
  cfg.n_eval = a.n_eval;
  cfg.out_dir = a.out_dir;
  EvalReport rep = run_pipeline(cfg);
  for (Label lab : {Label::NotCareful, Label::Careful}) {
    const LabelStats& st = rep.per_label.at(lab);
    std::cout << to_string(lab) << " accuracy: " << format_double(st.accuracy) << "\n";
  }
  std::cout << "artifacts under " << a.out_dir << "\n";
  return 0;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const missing_input& e) {
    std::cerr << e.what() << "\n";
    return kExitMissingInput;
  } catch (const parse_error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const short_input_error& e) {
    std::cerr << "input too short: " << e.what() << "\n";
    return kExitParse;
  } catch (const validation_error& e) {  // covers model + label failures
    std::cerr << "model/validation error: " << e.what() << "\n";
    return kExitModel;
  } catch (const invalid_argument_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Carefulness classification and handover simulation toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read defaults from a config file (flags override)");

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic trial dataset (CSV)");
  synth->add_option("--out", synth_args.out, "Output CSV path")->required();
  synth->add_option("--seed", synth_args.seed, "Dataset seed")->capture_default_str();
  synth->add_option("--n-per-label", synth_args.n_per_label, "Trials per cup state")
      ->capture_default_str();
  synth->add_option("--noise-sd", synth_args.noise_sd, "Positional noise sd (m)")
      ->capture_default_str();

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "Fit per-class behavior models from a dataset");
  fit->add_option("--data", fit_args.data, "Trial CSV")->required();
  fit->add_option("--out", fit_args.out, "Model file to write")->required();
  fit->add_option("--phase", fit_args.phase, "Motion phase: transport|reach")
      ->capture_default_str();
  fit->add_option("--window-radius", fit_args.window_radius, "Terminal window radius (m)")
      ->capture_default_str();
  fit->add_option("--filter-cutoff", fit_args.filter_cutoff, "Low-pass cutoff (Hz)")
      ->capture_default_str();
  fit->add_option("--degenerate-ratio", fit_args.degenerate_ratio,
                  "Minimum eigenvalue ratio for a usable fit")
      ->capture_default_str();

  ClassifyArgs classify_args;
  CLI::App* classify = app.add_subcommand("classify", "Classify trials online against a model");
  classify->add_option("--data", classify_args.data, "Trial CSV")->required();
  classify->add_option("--model", classify_args.model, "Model file")->required();
  classify->add_option("--out-dir", classify_args.out_dir, "Directory for report artifacts")
      ->required();
  classify->add_option("--phase", classify_args.phase, "Motion phase: transport|reach")
      ->capture_default_str();
  classify->add_option("--rule", classify_args.rule, "Belief update rule: projected|literal")
      ->capture_default_str();
  classify->add_option("--epsilon", classify_args.epsilon, "Belief integration gain")
      ->capture_default_str();
  classify->add_option("--threshold", classify_args.threshold, "Decision threshold")
      ->capture_default_str();
  classify->add_option("--trace-id", classify_args.trace_id,
                       "Also write the belief trace CSV of this trial id");

  SimulateArgs sim_args;
  CLI::App* simulate =
      app.add_subcommand("simulate", "Run neutral and expressive handover blocks");
  simulate->add_option("--human", sim_args.human, "Trial CSV supplying human streams")
      ->required();
  simulate->add_option("--out-dir", sim_args.out_dir, "Directory for block metrics")->required();
  simulate->add_option("--model", sim_args.model, "Optional model file for the diagnostic classifier");
  simulate->add_option("--v-const", sim_args.v_const, "Neutral cruise speed (m/s)")
      ->capture_default_str();
  simulate->add_option("--pour-dwell", sim_args.pour_dwell, "Pour dwell (s)")
      ->capture_default_str();

  ReportArgs report_args;
  CLI::App* report = app.add_subcommand(
      "report", "Full pipeline: synth, fit, classify, simulate, aggregate tables");
  report->add_option("--out-dir", report_args.out_dir, "Directory for all artifacts")->required();
  report->add_option("--train-seed", report_args.train_seed, "Training dataset seed")
      ->capture_default_str();
  report->add_option("--eval-seed", report_args.eval_seed, "Evaluation dataset seed")
      ->capture_default_str();
  report->add_option("--n-train", report_args.n_train, "Training trials per label")
      ->capture_default_str();
  report->add_option("--n-eval", report_args.n_eval, "Evaluation trials per label")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      return app.exit(e);  // --help / --version
    }
    app.exit(e);
    return kExitUsage;
  }

  if (synth->parsed()) return guarded([&] { return cmd_synth(synth_args); });
  if (fit->parsed()) return guarded([&] { return cmd_fit(fit_args); });
  if (classify->parsed()) return guarded([&] { return cmd_classify(classify_args); });
  if (simulate->parsed()) return guarded([&] { return cmd_simulate(sim_args); });
  if (report->parsed()) return guarded([&] { return cmd_report(report_args); });
  return kExitUsage;
}
