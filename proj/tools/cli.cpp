#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "clml/data.hpp"
#include "clml/errors.hpp"
#include "clml/metrics.hpp"
#include "clml/model.hpp"
#include "clml/trainer.hpp"
#include "clml/verify.hpp"

namespace clml::cli {

namespace {

// Flag values that CLI11 accepted syntactically but that fail a domain check.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

void write_text(const std::string& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << contents;
  if (!f) throw std::runtime_error("failed writing " + path);
}

struct SimulateArgs {
  std::string config;
  std::string mode = "keep";
  double ratio = 0.75;
  std::size_t n = 1000;
  std::size_t classes = 10;
  std::size_t features = 32;
  std::size_t groups = 0;
  double noise = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

struct TrainArgs {
  std::string config;
  std::string data;
  std::string checkpoint;
  std::string history;
  std::string loss = "bce";
  double gamma = 2.0;
  double lambda = 1.0;
  bool no_clml = false;
  bool no_correction = false;
  double delta = 0.6;
  std::size_t start_epoch = 1;
  double sv_threshold = kDefaultRelativeSvThreshold;
  bool sv_absolute = false;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t epochs = 20;
  std::size_t batch = 64;
  std::uint64_t seed = 0;
  double ema_decay = -1.0;
  std::vector<std::size_t> hidden{64};
  std::size_t embed_dim = 32;
  double holdout = 0.2;
};

struct EvalArgs {
  std::string config;
  std::string checkpoint;
  std::string data;
  std::string split = "all";
  double holdout = 0.2;
  std::uint64_t seed = 0;
  double threshold = kDefaultConfidenceThreshold;
};

struct CheckArgs {
  std::string config;
  std::size_t trials = 200;
  std::uint64_t seed = 1;
  std::string fault = "none";
};

void add_config_option(CLI::App* sub, std::string& path) {
  sub->add_option("--config", path, "file of 'key = value' lines; command-line flags take precedence");
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Subcommand config files are expanded into flags placed ahead of the user's
// own flags, skipping keys the command line already sets.
std::vector<std::string> expand_config(const CLI::App& app, const std::vector<std::string>& args) {
  if (args.empty()) return args;
  const CLI::App* sub = app.get_subcommand_no_throw(args[0]);
  if (sub == nullptr) return args;
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty()) return args;

  std::vector<std::string> expanded{args[0]};
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string flag = "--" + item.fullname();
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (opt == nullptr || flag == "--config" || flag == "--help") {
      throw CLI::ConfigError("unknown config key '" + item.fullname() + "' in " + path);
    }
    if (given_on_command_line(rest, flag)) continue;
    if (opt->get_expected_max() == 0) {
      expanded.push_back(flag + "=" + (item.inputs.empty() ? "true" : item.inputs.front()));
    } else {
      expanded.push_back(flag);
      expanded.insert(expanded.end(), item.inputs.begin(), item.inputs.end());
    }
  }
  expanded.insert(expanded.end(), rest.begin(), rest.end());
  return expanded;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.mode != "keep" && a.mode != "single") throw UsageError("--mode must be 'keep' or 'single'");
  if (!(a.ratio > 0.0 && a.ratio <= 1.0)) throw UsageError("--ratio must lie in (0,1]");
  if (a.n < 1 || a.classes < 1 || a.features < 1) throw UsageError("--n, --classes, --features must be >= 1");
  const std::size_t groups = a.groups == 0 ? std::min<std::size_t>(4, a.classes) : a.groups;
  if (groups > a.classes) throw UsageError("--groups must not exceed --classes");
  if (!(a.noise >= 0.0)) throw UsageError("--noise must be >= 0");

  Dataset ds = generate_synthetic({a.n, a.classes, a.features, groups, a.noise, a.seed});
  MissingnessSpec spec;
  spec.seed = a.seed;
  if (a.mode == "single") spec.mode = SingleLabel{};
  else spec.mode = KeepRatio{a.ratio};
  ds.observed = drop_labels(ds.truth, spec);
  save_dataset(ds, std::filesystem::path(a.out));

  out << "wrote " << a.out << " samples " << ds.n_samples() << " classes " << ds.n_classes()
      << " features " << ds.n_features() << '\n';
  out << "avg_labels_per_row truth " << fixed4(average_positives_per_row(ds.truth)) << " observed "
      << fixed4(average_positives_per_row(ds.observed)) << '\n';
  out << "kept_fraction " << fixed4(kept_fraction(ds.truth, ds.observed)) << '\n';
  return kExitOk;
}

TrainConfig to_config(const TrainArgs& a) {
  if (a.loss != "bce" && a.loss != "focal") throw UsageError("--loss must be 'bce' or 'focal'");
  TrainConfig cfg;
  cfg.lambda = a.lambda;
  cfg.use_clml = !a.no_clml;
  cfg.label_correction = !a.no_correction;
  cfg.correction = CorrectionConfig{a.delta, a.start_epoch};
  if (!(a.sv_threshold > 0.0)) throw UsageError("--sv-threshold must be positive");
  cfg.sv_threshold = a.sv_absolute ? SvThreshold::absolute(a.sv_threshold) : SvThreshold::relative(a.sv_threshold);
  if (a.loss == "focal") cfg.loss = FocalLoss{a.gamma};
  cfg.adam = AdamConfig{a.lr, a.beta1, a.beta2, a.eps};
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.seed = a.seed;
  if (a.ema_decay >= 0.0) cfg.ema_decay = a.ema_decay;
  cfg.hidden_dims = a.hidden;
  cfg.embed_dim = a.embed_dim;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (!(a.holdout >= 0.0 && a.holdout < 1.0)) throw UsageError("--holdout must lie in [0,1)");
  return cfg;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = to_config(a);
  const Dataset ds = load_dataset(std::filesystem::path(a.data));
  const DatasetSplit split = split_dataset(ds, a.holdout, a.seed);
  const Dataset* validation = split.holdout.n_samples() > 0 ? &split.holdout : nullptr;

  const TrainResult result = train(split.train, validation, cfg, &err);

  const std::string checkpoint = a.checkpoint.empty() ? a.data + ".ckpt" : a.checkpoint;
  const std::string history = a.history.empty() ? a.data + ".history" : a.history;
  save_checkpoint(result.params, std::filesystem::path(checkpoint));
  if (result.ema_params) save_checkpoint(*result.ema_params, std::filesystem::path(checkpoint + ".ema"));
  write_text(history, format_history(result.history));

  out << "trained " << split.train.n_samples() << " rows, " << cfg.epochs << " epochs, loss "
      << describe(cfg.loss) << ", lambda " << a.lambda << (cfg.contrastive_enabled() ? "" : " (contrastive off)")
      << '\n';
  out << "checkpoint " << checkpoint << '\n' << "history " << history << '\n';
  if (validation) {
    out << "holdout metrics\n" << format_report(evaluate(result.params, *validation));
    if (result.ema_params) out << "holdout metrics (ema)\n" << format_report(evaluate(*result.ema_params, *validation));
  }
  return kExitOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (a.split != "all" && a.split != "train" && a.split != "holdout") {
    throw UsageError("--split must be 'all', 'train' or 'holdout'");
  }
  if (!(a.holdout >= 0.0 && a.holdout < 1.0)) throw UsageError("--holdout must lie in [0,1)");
  if (!(a.threshold >= 0.0 && a.threshold <= 1.0)) throw UsageError("--threshold must lie in [0,1]");

  const ModelParams params = load_checkpoint(std::filesystem::path(a.checkpoint));
  const Dataset ds = load_dataset(std::filesystem::path(a.data));
  Dataset target = ds;
  if (a.split != "all") {
    DatasetSplit split = split_dataset(ds, a.holdout, a.seed);
    target = a.split == "train" ? std::move(split.train) : std::move(split.holdout);
    if (target.n_samples() == 0) throw UsageError("selected split is empty");
  }
  out << format_report(evaluate(params, target, a.threshold));
  return kExitOk;
}

int cmd_check(const CheckArgs& a, bool full, std::ostream& out) {
  if (a.fault != "none" && a.fault != "negate") throw UsageError("--fault must be 'none' or 'negate'");
  if (a.trials < 1) throw UsageError("--trials must be >= 1");
  verify::CheckOptions opts;
  opts.trials = a.trials;
  opts.seed = a.seed;
  opts.negate_gradients = a.fault == "negate";
  const auto results = full ? verify::run_selftest(opts) : verify::run_gradcheck(opts);
  out << verify::format_results(results);
  return verify::all_passed(results) ? kExitOk : kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contrastive multi-label learning with missing labels"};
  app.name("clml");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset with missing labels");
  add_config_option(simulate, sim.config);
  simulate->add_option("--mode", sim.mode, "keep | single")->capture_default_str();
  simulate->add_option("--ratio", sim.ratio, "fraction of positives kept in keep mode")->capture_default_str();
  simulate->add_option("--n", sim.n, "number of samples")->capture_default_str();
  simulate->add_option("--classes", sim.classes, "number of classes")->capture_default_str();
  simulate->add_option("--features", sim.features, "feature width")->capture_default_str();
  simulate->add_option("--groups", sim.groups, "label templates (default min(4, classes))");
  simulate->add_option("--noise", sim.noise, "feature noise scale")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "random seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "output dataset file")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train a model on a dataset file");
  add_config_option(train_cmd, tr.config);
  train_cmd->add_option("--data", tr.data, "dataset file")->required();
  train_cmd->add_option("--checkpoint", tr.checkpoint, "output checkpoint (default <data>.ckpt)");
  train_cmd->add_option("--history", tr.history, "output history (default <data>.history)");
  train_cmd->add_option("--loss", tr.loss, "bce | focal")->capture_default_str();
  train_cmd->add_option("--gamma", tr.gamma, "focal loss exponent")->capture_default_str();
  train_cmd->add_option("--lambda", tr.lambda, "weight of the contrastive loss")->capture_default_str();
  train_cmd->add_flag("--no-clml", tr.no_clml, "train with the classification loss only");
  train_cmd->add_flag("--no-correction", tr.no_correction, "disable label correction");
  train_cmd->add_option("--delta", tr.delta, "label-correction probability threshold")->capture_default_str();
  train_cmd->add_option("--start-epoch", tr.start_epoch, "first epoch with label correction")->capture_default_str();
  train_cmd->add_option("--sv-threshold", tr.sv_threshold, "singular-value cutoff (relative to the largest)")
      ->capture_default_str();
  train_cmd->add_flag("--sv-absolute", tr.sv_absolute, "treat --sv-threshold as an absolute value");
  train_cmd->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--beta1", tr.beta1)->capture_default_str();
  train_cmd->add_option("--beta2", tr.beta2)->capture_default_str();
  train_cmd->add_option("--eps", tr.eps)->capture_default_str();
  train_cmd->add_option("--epochs", tr.epochs)->capture_default_str();
  train_cmd->add_option("--batch", tr.batch, "minibatch size")->capture_default_str();
  train_cmd->add_option("--seed", tr.seed)->capture_default_str();
  train_cmd->add_option("--ema-decay", tr.ema_decay, "keep an EMA copy with this decay (e.g. 0.999)");
  train_cmd->add_option("--hidden", tr.hidden, "hidden layer widths")->capture_default_str();
  train_cmd->add_option("--embed-dim", tr.embed_dim, "embedding width D")->capture_default_str();
  train_cmd->add_option("--holdout", tr.holdout, "fraction held out for validation")->capture_default_str();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint against a dataset's true labels");
  add_config_option(eval, ev.config);
  eval->add_option("--checkpoint", ev.checkpoint)->required();
  eval->add_option("--data", ev.data)->required();
  eval->add_option("--split", ev.split, "all | train | holdout")->capture_default_str();
  eval->add_option("--holdout", ev.holdout, "holdout fraction used at training time")->capture_default_str();
  eval->add_option("--seed", ev.seed, "seed used at training time")->capture_default_str();
  eval->add_option("--threshold", ev.threshold, "confidence threshold")->capture_default_str();

  CheckArgs gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  CheckArgs st;
  auto* selftest = app.add_subcommand("selftest", "gradient checks plus inequality and nonnegativity samplers");
  for (auto [sub, a] : {std::pair{gradcheck, &gc}, std::pair{selftest, &st}}) {
    add_config_option(sub, a->config);
    sub->add_option("--trials", a->trials)->capture_default_str();
    sub->add_option("--seed", a->seed)->capture_default_str();
    sub->add_option("--fault", a->fault, "none | negate (harness sanity check)")->capture_default_str();
  }

  try {
    const std::vector<std::string> expanded = expand_config(app, args);
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << "run 'clml --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (train_cmd->parsed()) return cmd_train(tr, out, err);
    if (eval->parsed()) return cmd_eval(ev, out);
    if (gradcheck->parsed()) return cmd_check(gc, false, out);
    if (selftest->parsed()) return cmd_check(st, true, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace clml::cli
