// Command-line front end: every pipeline stage as a subcommand writing plain CSV.
// Exit codes: 0 success, 1 user error (bad flags, config, or input files), 2 internal error.

#include "pcuq/checkpoint.hpp"
#include "pcuq/config.hpp"
#include "pcuq/csv.hpp"
#include "pcuq/features.hpp"
#include "pcuq/metrics.hpp"
#include "pcuq/physics.hpp"
#include "pcuq/raw_io.hpp"
#include "pcuq/synthetic.hpp"
#include "pcuq/training.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using namespace pcuq;

namespace {

// Errors caused by the caller's inputs rather than by the program.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;  // section.key=value
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct Options {
  Common common;
  // extract
  std::string input;
  std::string temperature_file;
  std::string temperature_column;
  bool temperature_kelvin = false;
  std::size_t rows_per_snapshot = 2560;
  bool no_header = false;
  std::string label_mode = "none";
  // simulate
  double t_end = 0.0;
  double dt = 0.0;
  std::optional<double> load;
  std::optional<double> rpm;
  bool deterministic = false;
  bool zero_coefficients = false;
  // train / eval / attack / sweep
  std::string data;
  std::string train_data;
  std::string model;
  std::string family;
  std::string history;
  std::vector<std::string> splits;
  std::vector<double> eps;
  std::string grid = "all";
  bool baseline_dac = false;
};

config::RunConfig load_run_config(const Common& c) {
  config::RunConfig rc = c.config_path.empty() ? config::defaults() : config::load_config(c.config_path);
  for (const auto& o : c.overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw UserError("--set expects section.key=value, got '" + o + "'");
    }
    config::apply(rc, o.substr(0, dot), o.substr(dot + 1, eq - dot - 1), o.substr(eq + 1));
  }
  if (c.seed) rc.seed = *c.seed;
  rc.train.seed = rc.seed;
  rc.train.network.head = training::head_for(rc.family);
  rc.physics.validate();
  rc.train.validate();
  return rc;
}

void require_out(const Common& c) {
  if (c.out.empty()) throw UserError("--out is required");
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

// ---- extract ---------------------------------------------------------------

std::vector<double> physics_labels_for(const Eigen::VectorXd& t_norm, const config::RunConfig& rc) {
  physics::SimulationOptions opts;
  opts.stop_damage = 1.0;
  const auto traj = physics::simulate_trajectory(rc.physics, physics::Schedule::constant(rc.operating.load, rc.operating.rpm),
                                                 1e6, rc.reference_dt, rc.seed, opts);
  const double life = traj.states.back().t;
  std::vector<double> times;
  for (Eigen::Index i = 0; i < t_norm.size(); ++i) times.push_back(std::clamp(t_norm(i), 0.0, 1.0) * life);
  return physics::physics_labels_at(traj, times);
}

std::optional<Eigen::VectorXd> make_labels(const Eigen::MatrixXd& x, const std::string& mode, const config::RunConfig& rc) {
  const Eigen::VectorXd t = x.col(features::kTimeColumn);
  if (mode == "none") return std::nullopt;
  if (mode == "linear") return t;
  if (mode == "physics") {
    const auto v = physics_labels_for(t, rc);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  throw UserError("label mode must be none, linear or physics, got '" + mode + "'");
}

int run_extract(const Options& o) {
  require_out(o.common);
  if (o.input.empty()) throw UserError("extract: --input is required");
  const auto rc = load_run_config(o.common);
  io::RawSchema schema;
  schema.rows_per_snapshot = o.rows_per_snapshot;
  schema.has_header = !o.no_header;
  schema.temperature = o.temperature_column;
  schema.sampling_rate = rc.features.sampling_rate;
  io::RawRecord rec = io::load_raw_csv(o.input, schema, rc.physics.ambient_temperature);
  if (!o.temperature_file.empty()) io::join_temperatures(rec, io::load_temperature_csv(o.temperature_file, !o.temperature_kelvin));

  std::vector<Eigen::VectorXd> h, v;
  std::vector<double> times, temps;
  for (const auto& s : rec.snapshots) {
    const auto hw = features::segment_windows(s.horizontal, std::min(rc.features.window_len, static_cast<std::size_t>(s.horizontal.size())),
                                              rc.features.stride);
    const auto vw = features::segment_windows(s.vertical, std::min(rc.features.window_len, static_cast<std::size_t>(s.vertical.size())),
                                              rc.features.stride);
    for (std::size_t k = 0; k < hw.size(); ++k) {
      h.push_back(hw[k]);
      v.push_back(vw[k]);
      times.push_back(s.timestamp + static_cast<double>(k * rc.features.stride) / rc.features.sampling_rate);
      temps.push_back(s.temperature);
    }
  }
  const Eigen::MatrixXd x = features::extract_dataset(h, v, times, temps, rc.features);
  const auto labels = make_labels(x, o.label_mode, rc);
  io::write_feature_csv(o.common.out, x, labels ? &*labels : nullptr);
  std::cout << "rows=" << x.rows() << " snapshots=" << rec.snapshots.size()
            << " temperature_substituted=" << (rec.temperature_substituted ? 1 : 0) << '\n';
  if (rec.temperature_substituted) {
    std::cerr << "note: no temperature source; T set to ambient " << rc.physics.ambient_temperature << " K\n";
  }
  return 0;
}

// ---- simulate / labels / synthesize -----------------------------------------

int run_simulate(const Options& o) {
  require_out(o.common);
  auto rc = load_run_config(o.common);
  if (o.zero_coefficients) {
    // Every multiplicative rate coefficient; fatigue has none, so a zero load is still needed for D_F.
    auto& p = rc.physics;
    p.edv_coupling = p.edv_growth = 0.0;
    p.archard = p.abrasive_wear = 0.0;
    p.roughness_from_wear = p.roughness_from_debris = 0.0;
    p.oxidation_rate = 0.0;
    p.friction = 0.0;
    p.debris_generation = 0.0;
  }
  const double load = o.load.value_or(rc.operating.load);
  const double rpm = o.rpm.value_or(rc.operating.rpm);
  const double dt = o.dt > 0.0 ? o.dt : rc.reference_dt;
  physics::SimulationOptions opts;
  opts.stochastic = !o.deterministic;
  double t_end = o.t_end;
  if (!(t_end > 0.0)) {
    opts.stop_damage = 1.0;
    t_end = 1e6;
  }
  const auto traj = physics::simulate_trajectory(rc.physics, physics::Schedule::constant(load, rpm), t_end, dt, rc.seed, opts);
  io::write_trajectory_csv(o.common.out, traj);
  std::cout << "samples=" << traj.size() << " t_end=" << io::format_double(traj.states.back().t)
            << " D_end=" << io::format_double(traj.states.back().damage) << '\n';
  return 0;
}

int run_labels(const Options& o) {
  require_out(o.common);
  if (o.data.empty()) throw UserError("labels: --data is required");
  const auto rc = load_run_config(o.common);
  const io::FeatureTable t = io::read_feature_csv(o.data);
  const std::string mode = o.label_mode == "none" ? "linear" : o.label_mode;
  const auto labels = make_labels(t.x, mode, rc);
  io::write_feature_csv(o.common.out, t.x, &*labels, t.split.empty() ? nullptr : &t.split);
  std::cout << "rows=" << t.x.rows() << " mode=" << mode << '\n';
  return 0;
}

int run_synthesize(const Options& o) {
  require_out(o.common);
  const auto rc = load_run_config(o.common);
  const auto d = synthetic::synthesize_dataset(rc.synthetic, rc.physics, rc.seed);
  io::write_feature_csv(o.common.out, d.raw, &d.y, &d.split);
  int counts[3] = {0, 0, 0};
  for (int s : d.split) ++counts[s];
  std::cout << "rows=" << d.raw.rows() << " train=" << counts[0] << " test=" << counts[1] << " ood=" << counts[2] << '\n';
  return 0;
}

// ---- data plumbing for train / eval ------------------------------------------

struct Rows {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Rows select(const io::FeatureTable& t, std::optional<int> split) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < t.x.rows(); ++i) {
    if (!split || t.split.empty() || t.split[static_cast<std::size_t>(i)] == *split) idx.push_back(i);
  }
  Rows r;
  r.x.resize(static_cast<Eigen::Index>(idx.size()), t.x.cols());
  r.y.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    r.x.row(static_cast<Eigen::Index>(i)) = t.x.row(idx[i]);
    r.y(static_cast<Eigen::Index>(i)) = t.y.size() ? t.y(idx[i]) : 0.0;
  }
  return r;
}

io::FeatureTable read_labelled(const std::string& path) {
  io::FeatureTable t = io::read_feature_csv(path);
  if (t.y.size() == 0) throw UserError(path + ": no 'label' column");
  return t;
}

training::PhysicsReference reference_for(const config::RunConfig& rc) {
  return training::PhysicsReference::simulate(rc.physics, rc.operating.load, rc.operating.rpm, rc.reference_dt);
}

std::string describe(training::ModelFamily family, const training::TrainConfig& t) {
  auto d = [](double v) { return io::format_double(v); };
  switch (family) {
    case training::ModelFamily::Sngp: return "gamma=" + d(t.network.rff_gamma);
    case training::ModelFamily::Sner: return "lambda=" + d(t.evidential_lambda);
    case training::ModelFamily::McDropout: return "p_d=" + d(t.network.dropout_rate);
    case training::ModelFamily::DeepEnsemble: return "N_m=" + std::to_string(t.ensemble_size);
  }
  return "";
}

io::Checkpoint train_checkpoint(const config::RunConfig& rc, const io::FeatureTable& table,
                                std::vector<training::LossBreakdown>* history) {
  const Rows raw = select(table, table.split.empty() ? std::nullopt : std::optional<int>(synthetic::Train));
  if (raw.x.rows() == 0) throw UserError("train: no training rows (split 0)");
  io::Checkpoint ck;
  ck.normalization = features::fit_normalization(raw.x);
  training::Dataset ds{ck.normalization->apply(raw.x), raw.y};
  const training::PhysicsReference ref = reference_for(rc);
  ck.predictor = training::train_predictor(rc.family, ds, rc.train, rc.train.physics ? &ref : nullptr, history);
  ck.config = config::echo(rc);
  ck.config["run.describe"] = describe(rc.family, rc.train);
  return ck;
}

int run_train(const Options& o) {
  require_out(o.common);
  if (o.data.empty()) throw UserError("train: --data is required");
  auto rc = load_run_config(o.common);
  if (!o.family.empty()) {
    config::apply(rc, "run", "family", o.family);
    rc.train.network.head = training::head_for(rc.family);
  }
  const io::FeatureTable table = read_labelled(o.data);
  std::vector<training::LossBreakdown> history;
  const io::Checkpoint ck = train_checkpoint(rc, table, &history);
  io::save_checkpoint(ck, o.common.out);
  const std::string hist = o.history.empty() ? with_suffix(o.common.out, ".history.csv") : o.history;
  io::write_history_csv(hist, history);
  std::cout << "family=" << training::to_string(rc.family) << " members=" << ck.predictor.members.size()
            << " epochs=" << history.size();
  if (!history.empty()) std::cout << " final_total=" << io::format_double(history.back().total);
  std::cout << '\n';
  return 0;
}

// ---- eval / attack / sweep -----------------------------------------------------

std::optional<int> parse_split(const std::string& s) {
  if (s == "train") return synthetic::Train;
  if (s == "test") return synthetic::Test;
  if (s == "ood") return synthetic::OutOfDomain;
  if (s == "all") return std::nullopt;
  throw UserError("split must be train, test, ood or all, got '" + s + "'");
}

bool is_baseline(training::ModelFamily f) {
  return f == training::ModelFamily::McDropout || f == training::ModelFamily::DeepEnsemble;
}

struct EvalContext {
  io::FeatureTable data;
  Eigen::MatrixXd train_x;  // normalized reference rows for distances
};

EvalContext eval_context(const Options& o, const io::Checkpoint& ck) {
  EvalContext c;
  c.data = read_labelled(o.data);
  const io::FeatureTable train_table = o.train_data.empty() ? c.data : io::read_feature_csv(o.train_data);
  Rows tr = select(train_table, train_table.split.empty() ? std::nullopt : std::optional<int>(synthetic::Train));
  if (tr.x.rows() == 0) throw UserError("eval: no training rows to measure distances against");
  if (ck.normalization) {
    c.data.x = ck.normalization->apply(c.data.x);
    tr.x = ck.normalization->apply(tr.x);
  }
  c.train_x = tr.x;
  return c;
}

io::ReportRow evaluate_rows(const training::Predictor& p, const std::string& config, const Rows& rows,
                            const Eigen::MatrixXd& train_x, bool baseline_dac) {
  const auto pred = training::predict(p, rows.x);
  const Eigen::VectorXd sigma = pred.variance.cwiseMax(0.0).cwiseSqrt();
  const Eigen::VectorXd dist = metrics::distances_to_training(rows.x, train_x);
  const bool dac_defined = baseline_dac || !is_baseline(p.family);
  const auto rep = metrics::evaluate(rows.y, pred.mean, dac_defined ? sigma : Eigen::VectorXd(), dist);
  return {training::to_string(p.family), config, rep.mse, rep.mae, rep.score, rep.dac};
}

std::vector<std::string> default_splits(const io::FeatureTable& t) {
  if (t.split.empty()) return {"all"};
  std::vector<std::string> s;
  for (int want : {synthetic::Test, synthetic::OutOfDomain}) {
    if (std::find(t.split.begin(), t.split.end(), want) != t.split.end()) s.push_back(want == synthetic::Test ? "test" : "ood");
  }
  if (s.empty()) s.push_back("train");
  return s;
}

int run_eval(const Options& o) {
  require_out(o.common);
  if (o.model.empty() || o.data.empty()) throw UserError("eval: --model and --data are required");
  const io::Checkpoint ck = io::load_checkpoint(o.model);
  const EvalContext ctx = eval_context(o, ck);
  const auto it = ck.config.find("run.describe");
  const std::string base = it == ck.config.end() ? std::string("checkpoint") : it->second;
  std::vector<io::ReportRow> rows;
  for (const auto& s : o.splits.empty() ? default_splits(ctx.data) : o.splits) {
    const Rows r = select(ctx.data, parse_split(s));
    if (r.x.rows() == 0) throw UserError("eval: split '" + s + "' has no rows");
    rows.push_back(evaluate_rows(ck.predictor, base + "@" + s, r, ctx.train_x, o.baseline_dac));
  }
  io::write_report_csv(o.common.out, rows);
  for (const auto& r : rows) {
    std::cout << r.config << " MSE=" << io::format_double(r.mse) << " DAC=" << metrics::format_optional(r.dac) << '\n';
  }
  return 0;
}

int run_attack(const Options& o) {
  require_out(o.common);
  if (o.model.empty() || o.data.empty()) throw UserError("attack: --model and --data are required");
  const auto rc = load_run_config(o.common);
  const io::Checkpoint ck = io::load_checkpoint(o.model);
  const EvalContext ctx = eval_context(o, ck);
  const std::string split = o.splits.empty() ? default_splits(ctx.data).front() : o.splits.front();
  const Rows r = select(ctx.data, parse_split(split));
  if (r.x.rows() == 0) throw UserError("attack: split '" + split + "' has no rows");
  std::vector<double> eps = o.eps.empty() ? rc.attack_eps : o.eps;
  eps.insert(eps.begin(), 0.0);
  // The gradient comes from the first member; ensemble predictions use every member on the shifted inputs.
  const NetworkModel& m = ck.predictor.members.front();
  std::ostringstream os;
  os << "eps,L_data,MSE,MAE,Score\n";
  for (double e : eps) {
    if (e < 0.0) throw UserError("attack: eps must be >= 0");
    const Eigen::MatrixXd adv = training::fgsm_perturb(m, r.x, r.y, e, rc.train.evidential_lambda);
    const auto pred = training::predict(ck.predictor, adv);
    const auto rep = metrics::evaluate(r.y, pred.mean, Eigen::VectorXd(), Eigen::VectorXd::Zero(r.y.size()));
    os << io::format_double(e) << ',' << io::format_double(training::data_loss(m, adv, r.y, rc.train.evidential_lambda))
       << ',' << io::format_double(rep.mse) << ',' << io::format_double(rep.mae) << ',' << io::format_double(rep.score)
       << '\n';
  }
  io::write_text_file(o.common.out, os.str());
  std::cout << os.str();
  return 0;
}

int run_sweep(const Options& o) {
  require_out(o.common);
  if (o.data.empty()) throw UserError("sweep: --data is required");
  const auto rc = load_run_config(o.common);
  const io::FeatureTable table = read_labelled(o.data);
  struct Cell {
    config::RunConfig rc;
  };
  std::vector<Cell> cells;
  auto add = [&](training::ModelFamily f, auto&& set) {
    config::RunConfig c = rc;
    c.family = f;
    c.train.network.head = training::head_for(f);
    set(c);
    cells.push_back({c});
  };
  const std::string g = o.grid;
  if (g != "all" && g != "gamma" && g != "lambda" && g != "dropout" && g != "ensemble") {
    throw UserError("sweep: --grid must be all, gamma, lambda, dropout or ensemble");
  }
  if (g == "all" || g == "gamma") {
    for (double v : rc.sweep.gamma) add(training::ModelFamily::Sngp, [v](config::RunConfig& c) { c.train.network.rff_gamma = v; });
  }
  if (g == "all" || g == "lambda") {
    for (double v : rc.sweep.lambda) add(training::ModelFamily::Sner, [v](config::RunConfig& c) { c.train.evidential_lambda = v; });
  }
  if (g == "all" || g == "dropout") {
    for (double v : rc.sweep.dropout) add(training::ModelFamily::McDropout, [v](config::RunConfig& c) { c.train.network.dropout_rate = v; });
  }
  if (g == "all" || g == "ensemble") {
    for (int v : rc.sweep.ensemble) add(training::ModelFamily::DeepEnsemble, [v](config::RunConfig& c) { c.train.ensemble_size = v; });
  }
  std::vector<io::ReportRow> rows;
  for (const auto& cell : cells) {
    const io::Checkpoint ck = train_checkpoint(cell.rc, table, nullptr);
    Options eo = o;
    const EvalContext ctx = eval_context(eo, ck);
    for (const auto& s : o.splits.empty() ? default_splits(ctx.data) : o.splits) {
      const Rows r = select(ctx.data, parse_split(s));
      if (r.x.rows() == 0) continue;
      rows.push_back(evaluate_rows(ck.predictor, describe(cell.rc.family, cell.rc.train) + "@" + s, r, ctx.train_x,
                                   o.baseline_dac));
      std::cout << rows.back().model << ' ' << rows.back().config << " MSE=" << io::format_double(rows.back().mse)
                << " DAC=" << metrics::format_optional(rows.back().dac) << '\n';
    }
  }
  io::write_report_csv(o.common.out, rows);
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "INI run configuration")->check(CLI::ExistingFile);
  sub->add_option("--set", c.overrides, "Override one setting: section.key=value (repeatable)");
  sub->add_option("--seed", c.seed, "Seed for every random draw");
  sub->add_option("--out", c.out, "Output file");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-constrained degradation models with distance-aware uncertainty"};
  app.require_subcommand(1);
  Options o;

  auto* extract = app.add_subcommand("extract", "Raw vibration CSV -> feature CSV");
  add_common(extract, o.common);
  extract->add_option("--input", o.input, "Vibration CSV")->required()->check(CLI::ExistingFile);
  extract->add_option("--temperature", o.temperature_file, "Separate temperature CSV (joined by nearest time)")
      ->check(CLI::ExistingFile);
  extract->add_flag("--temperature-kelvin", o.temperature_kelvin, "Temperature file is in K rather than deg C");
  extract->add_option("--temperature-column", o.temperature_column, "Temperature column inside the vibration file (K)");
  extract->add_option("--rows-per-snapshot", o.rows_per_snapshot, "Rows per acquisition snapshot");
  extract->add_flag("--no-header", o.no_header, "Vibration file has no header row");
  extract->add_option("--labels", o.label_mode, "none | linear | physics");

  auto* simulate = app.add_subcommand("simulate", "Physics degradation trajectory CSV");
  add_common(simulate, o.common);
  simulate->add_option("--t-end", o.t_end, "End time in s (default: run until D_coupled = 1)");
  simulate->add_option("--dt", o.dt, "Step in s (default: run.reference_dt)");
  simulate->add_option("--load", o.load, "Radial load in N");
  simulate->add_option("--rpm", o.rpm, "Shaft speed in rpm");
  simulate->add_flag("--deterministic", o.deterministic, "Drop the debris noise term");
  simulate->add_flag("--zero-coefficients", o.zero_coefficients, "Zero every wear, oxidation and EDV coefficient");

  auto* labels = app.add_subcommand("labels", "Attach linear or physics labels to a feature CSV");
  add_common(labels, o.common);
  labels->add_option("--data", o.data, "Feature CSV")->required()->check(CLI::ExistingFile);
  labels->add_option("--mode", o.label_mode, "linear | physics")->required();

  auto* synthesize = app.add_subcommand("synthesize", "Synthetic labelled feature CSV with train/test/ood splits");
  add_common(synthesize, o.common);

  auto* train = app.add_subcommand("train", "Train a predictor and write a checkpoint plus history CSV");
  add_common(train, o.common);
  train->add_option("--data", o.data, "Labelled feature CSV (split 0 rows train when a split column exists)")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--family", o.family, "sngp | sner | mc | de");
  train->add_option("--history", o.history, "History CSV (default: <out stem>.history.csv)");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint: MSE, MAE, Score, DAC");
  add_common(eval, o.common);
  eval->add_option("--model", o.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", o.data, "Labelled feature CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--train-data", o.train_data, "Training rows for distances (default: split 0 of --data)")
      ->check(CLI::ExistingFile);
  eval->add_option("--split", o.splits, "train | test | ood | all (repeatable)");
  eval->add_flag("--baseline-dac", o.baseline_dac, "Also compute DAC for the dropout and ensemble baselines");

  auto* attack = app.add_subcommand("attack", "FGSM sweep over perturbation magnitudes");
  add_common(attack, o.common);
  attack->add_option("--model", o.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  attack->add_option("--data", o.data, "Labelled feature CSV")->required()->check(CLI::ExistingFile);
  attack->add_option("--train-data", o.train_data, "Training rows (default: split 0 of --data)")->check(CLI::ExistingFile);
  attack->add_option("--split", o.splits, "Rows to attack");
  attack->add_option("--eps", o.eps, "Perturbation magnitudes (default: attack.eps)")->delimiter(',');

  auto* sweep = app.add_subcommand("sweep", "Train and evaluate every cell of the hyperparameter grids");
  add_common(sweep, o.common);
  sweep->add_option("--data", o.data, "Labelled feature CSV")->required()->check(CLI::ExistingFile);
  sweep->add_option("--grid", o.grid, "all | gamma | lambda | dropout | ensemble");
  sweep->add_option("--split", o.splits, "Evaluation splits");
  sweep->add_flag("--baseline-dac", o.baseline_dac, "Also compute DAC for the dropout and ensemble baselines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*extract) return run_extract(o);
    if (*simulate) return run_simulate(o);
    if (*labels) return run_labels(o);
    if (*synthesize) return run_synthesize(o);
    if (*train) return run_train(o);
    if (*eval) return run_eval(o);
    if (*attack) return run_attack(o);
    if (*sweep) return run_sweep(o);
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const config::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const io::CsvError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const io::CheckpointError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
