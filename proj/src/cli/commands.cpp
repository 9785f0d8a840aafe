#include "ucd/cli/commands.hpp"

#include "ucd/errors.hpp"

#include <CLI11.hpp>

#include <malloc.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace ucd::cli {

namespace fs = std::filesystem;

fs::path resolve_data_path(const fs::path& path) {
  const char* dir = std::getenv("UCD_DATA_DIR");
  if (dir == nullptr || *dir == '\0' || path.is_absolute()) return path;
  return fs::path(dir) / path;
}

std::vector<std::pair<double, double>> zeta_grid() {
  const double values[] = {0.01, 0.1, 1.0, 1.5};
  std::vector<std::pair<double, double>> grid;
  for (const double z0 : values) {
    for (const double z1 : values) grid.emplace_back(z0, z1);
  }
  return grid;
}

std::uint64_t grid_seed(std::uint64_t base, std::size_t index) {
  // splitmix64 of base + (index + 1) * golden gamma.
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

EvalSubset parse_eval_subset(const std::string& name) {
  if (name == "test") return EvalSubset::Test;
  if (name == "validation") return EvalSubset::Validation;
  if (name == "train") return EvalSubset::Train;
  if (name == "all") return EvalSubset::All;
  throw UsageError("unknown subset '" + name + "' (expected test, validation, train or all)");
}

EvalReport evaluate(const Artifact& a, const ResponseDataset& data, EvalSubset which, int draws,
                    std::uint64_t seed, bool mc_eval) {
  const Split split = split_dataset(data, a.ratios, a.split_seed);
  std::vector<std::size_t> subset;
  switch (which) {
    case EvalSubset::Test: subset = split.test; break;
    case EvalSubset::Validation: subset = split.validation; break;
    case EvalSubset::Train: subset = split.train; break;
    case EvalSubset::All:
      subset.resize(data.responses.size());
      std::iota(subset.begin(), subset.end(), std::size_t{0});
      break;
  }
  if (subset.empty()) throw DataError("the selected evaluation subset has no responses");

  const auto model = make_model(a.model);
  const ResponseBatch batch = make_batch(data, subset);
  std::vector<int> labels;
  labels.reserve(subset.size());
  for (const std::size_t i : subset) labels.push_back(data.responses[i].correct);

  EvalReport r;
  r.responses = subset.size();
  GaussianNoise noise(seed);
  const Eigen::RowVectorXd p = mc_eval ? predict_expected(*model, a.posterior, batch, draws, noise)
                                       : predict_center(*model, a.posterior, batch);
  const std::vector<double> preds(p.data(), p.data() + p.size());
  const PointScores scores = auc_acc(preds, labels);
  r.auc = scores.auc;
  r.acc = scores.acc;

  const auto intervals = project_intervals(*model, a.posterior, batch, draws, noise);
  r.intervals = picp_piaw(intervals, labels);
  r.uncertainty = uncertainty_correlations(*model, a.posterior, data, split.train, draws, noise);
  return r;
}

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

void write_metric(std::ostream& out, const std::string& name, std::optional<double> value,
                  const std::string& note = "") {
  out << name << ',' << (value ? fmt(*value) : "NA") << ',' << note << '\n';
}

}  // namespace

void write_eval_report(const EvalReport& r, std::ostream& out) {
  out << "metric,value,note\n";
  write_metric(out, "responses", static_cast<double>(r.responses));
  write_metric(out, "auc", r.auc, r.auc ? "" : "single label class");
  write_metric(out, "acc", r.acc);
  write_metric(out, "picp", r.intervals.picp);
  write_metric(out, "piaw", r.intervals.piaw);
  write_metric(out, "spearman_sigma_count", r.uncertainty.sigma_vs_count.value,
               r.uncertainty.sigma_vs_count.note);
  write_metric(out, "spearman_model_sigma_distance", r.uncertainty.model_sigma_vs_distance.value,
               r.uncertainty.model_sigma_vs_distance.note);
}

namespace {

const VariableBlock& proficiency_block(const Artifact& a) {
  for (const auto& b : a.posterior.blocks) {
    if (b.role == VariableRole::Student) return b;
  }
  throw DataError("artifact has no student variable");
}

std::string dimension_label(const Artifact& a, Index row) {
  if (a.model.kind == ModelKind::NeuralCdm) return a.concepts.at(static_cast<std::size_t>(row));
  if (a.model.kind == ModelKind::Irt) return "theta";
  return "dim" + std::to_string(row + 1);
}

Index student_index(const Artifact& a, const std::string& id) {
  const auto idx = a.students.lookup(id);
  if (!idx) {
    throw DataError("unknown student id '" + id + "' (artifact has " +
                    std::to_string(a.students.size()) + " students)");
  }
  return *idx;
}

}  // namespace

std::vector<ReportRow> posterior_report(const Artifact& a, const std::vector<std::string>& ids) {
  const VariableBlock& b = proficiency_block(a);
  const grad::Matrix sigma = a.posterior.effective_sigma(b);
  const grad::Matrix sigma_m = a.posterior.model_sigma(b);
  const grad::Matrix sigma_d = a.posterior.data_sigma(b);
  std::vector<ReportRow> rows;
  for (const auto& id : ids) {
    const Index s = student_index(a, id);
    for (Index k = 0; k < b.rows(); ++k) {
      ReportRow r;
      r.student = id;
      r.dimension = dimension_label(a, k);
      r.value = b.transform.to_domain(b.mu(k, s));
      r.interval = confidence_interval(b.transform, b.mu(k, s), sigma(k, s));
      r.sigma_model = sigma_m(k, s);
      r.sigma_data = sigma_d(k, s);
      r.sigma = sigma(k, s);
      r.tau = b.tau(k, s);
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

std::vector<DensityPoint> density_curves(const Artifact& a, const std::vector<std::string>& ids) {
  const VariableBlock& b = proficiency_block(a);
  const grad::Matrix sigma = a.posterior.effective_sigma(b);
  std::vector<DensityPoint> points;
  for (const auto& id : ids) {
    const Index s = student_index(a, id);
    for (Index k = 0; k < b.rows(); ++k) {
      const double mu = b.mu(k, s);
      const double sd = sigma(k, s);
      const std::string dim = dimension_label(a, k);
      if (!(sd > 0.0)) {
        points.push_back({id, dim, true, b.transform.to_domain(mu), 0.0});
        continue;
      }
      for (int i = 0; i < kDensityPoints; ++i) {
        const double z = mu - 4.0 * sd + 8.0 * sd * i / (kDensityPoints - 1);
        const double x = b.transform.to_domain(z);
        // Skip grid points that round onto a domain boundary.
        if (!b.transform.contains(x)) continue;
        points.push_back({id, dim, false, x, posterior_density(b.transform, mu, sd, x)});
      }
    }
  }
  return points;
}

namespace {

struct TrainFlags {
  std::string model = "irt";
  std::string data;
  std::string q;
  std::string out = "model.json";
  std::string log;
  double zeta0 = 1.0;
  double zeta1 = 1.0;
  int mc_samples = 5;
  double lr = 0.002;
  int batch_size = 256;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> split_seed;
  std::string pi = "uniform";
  int epochs = 100;
  int patience = 10;
  int latent_dim = 16;
  std::vector<int> hidden = {512, 256};
  bool kl_exact = false;
  bool shared_lambdas = false;
  bool quiet = false;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool with_outputs) {
  cmd->add_option("--model", f.model, "irt, mirt or neuralcdm")->capture_default_str();
  cmd->add_option("--data", f.data, "responses CSV (student_id,question_id,correct)")->required();
  cmd->add_option("--q", f.q, "Q-matrix CSV (question_id,<concept>...)");
  if (with_outputs) {
    cmd->add_option("--out", f.out, "artifact path")->capture_default_str();
    cmd->add_option("--log", f.log, "per-epoch CSV log (default: <out stem>_log.csv)");
  }
  cmd->add_option("--zeta0", f.zeta0, "KL weight of diagnostic variables")->capture_default_str();
  cmd->add_option("--zeta1", f.zeta1, "KL weight of network variables")->capture_default_str();
  cmd->add_option("--mc-samples", f.mc_samples, "Monte Carlo samples per batch")->capture_default_str();
  cmd->add_option("--lr", f.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--batch-size", f.batch_size)->capture_default_str();
  cmd->add_option("--seed", f.seed)->capture_default_str();
  cmd->add_option("--split-seed", f.split_seed, "seed of the train/validation/test split (default: --seed)");
  cmd->add_option("--pi", f.pi, "KL batch weights: geometric or uniform")
      ->check(CLI::IsMember({"geometric", "uniform"}))
      ->capture_default_str();
  cmd->add_option("--epochs", f.epochs)->capture_default_str();
  cmd->add_option("--patience", f.patience)->capture_default_str();
  cmd->add_option("--latent-dim", f.latent_dim, "MIRT trait dimension")->capture_default_str();
  cmd->add_option("--hidden", f.hidden, "NeuralCDM hidden widths")->delimiter(',')->expected(2);
  cmd->add_flag("--kl-exact", f.kl_exact, "full diagnostic KL in every batch");
  cmd->add_flag("--shared-lambdas", f.shared_lambdas, "one lambda set for students and questions");
  cmd->add_flag("--quiet", f.quiet, "no per-epoch progress");
}

struct Prepared {
  ModelConfig model;
  TrainConfig train;
  InitOptions init;
  std::uint64_t split_seed = 0;
};

Prepared prepare(const TrainFlags& f, const CLI::App* cmd) {
  Prepared p;
  p.model.kind = parse_model_kind(f.model);
  if (cmd->count("--latent-dim") > 0 && p.model.kind != ModelKind::Mirt) {
    throw UsageError("--latent-dim only applies to --model mirt");
  }
  if (cmd->count("--hidden") > 0 && p.model.kind != ModelKind::NeuralCdm) {
    throw UsageError("--hidden only applies to --model neuralcdm");
  }
  if (f.latent_dim < 1) throw UsageError("--latent-dim must be >= 1");
  for (const int h : f.hidden) {
    if (h < 1) throw UsageError("--hidden widths must be >= 1");
  }
  p.model.latent_dim = f.latent_dim;
  p.model.hidden = f.hidden;
  p.train.zeta0 = f.zeta0;
  p.train.zeta1 = f.zeta1;
  p.train.mc_samples = f.mc_samples;
  p.train.learning_rate = f.lr;
  p.train.batch_size = f.batch_size;
  p.train.seed = f.seed;
  p.train.pi_schedule = parse_pi_schedule(f.pi);
  p.train.max_epochs = f.epochs;
  p.train.patience = f.patience;
  p.train.kl_exact = f.kl_exact;
  try {
    p.train.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  p.init.shared_lambdas = f.shared_lambdas;
  p.split_seed = f.split_seed.value_or(f.seed);
  return p;
}

ResponseDataset load_inputs(const std::string& data, const std::string& q) {
  std::optional<fs::path> qpath;
  if (!q.empty()) qpath = resolve_data_path(q);
  return load_dataset(resolve_data_path(data), qpath);
}

Artifact train_artifact(const ResponseDataset& data, const Split& split, const Prepared& p,
                        const EpochCallback& on_epoch, TrainResult* result_out) {
  const auto model = make_model(p.model);
  TrainResult result = train(*model, data, split, p.train, p.init, on_epoch);
  Artifact a;
  a.model = p.model;
  a.train = p.train;
  a.shape = data.shape();
  a.split_seed = p.split_seed;
  a.best_epoch = result.best_epoch;
  a.best_val_auc = result.best_val_auc;
  a.best_val_acc = result.best_val_acc;
  a.posterior = result.posterior;
  a.students = data.students;
  a.questions = data.questions;
  a.concepts = data.concepts;
  if (result_out) *result_out = std::move(result);
  return a;
}

fs::path default_log_path(const fs::path& artifact) {
  fs::path log = artifact;
  log.replace_filename(artifact.stem().string() + "_log.csv");
  return log;
}

int cmd_train(const TrainFlags& f, const CLI::App* cmd, std::ostream& out, std::ostream& err) {
  const Prepared p = prepare(f, cmd);
  ResponseDataset data = load_inputs(f.data, f.q);
  std::vector<std::string> warnings = data.warnings;
  const Split split = split_dataset(data, {}, p.split_seed, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';

  EpochCallback progress;
  if (!f.quiet) {
    progress = [&](const EpochLog& e) {
      char line[128];
      std::snprintf(line, sizeof(line), "epoch %3d  loss %.4f  val AUC %.4f  val Acc %.4f\n", e.epoch,
                    e.train_loss, e.val_auc, e.val_acc);
      err << line;
    };
  }
  TrainResult result;
  const Artifact a = train_artifact(data, split, p, progress, &result);
  const fs::path log = f.log.empty() ? default_log_path(f.out) : fs::path(f.log);
  save_artifact(a, f.out);
  write_epoch_log(result.log, log);
  char line[160];
  std::snprintf(line, sizeof(line), "best epoch %d: val AUC %.4f, val Acc %.4f (%.1f s)\n",
                result.best_epoch, result.best_val_auc, result.best_val_acc, result.seconds);
  out << line << "artifact: " << f.out << "\nlog: " << log.string() << '\n';
  return kOk;
}

int cmd_grid(const TrainFlags& f, const CLI::App* cmd, const std::string& out_dir, int jobs,
             std::ostream& out, std::ostream& err) {
  if (jobs < 1) throw UsageError("--jobs must be >= 1");
  if (cmd->count("--zeta0") > 0 || cmd->count("--zeta1") > 0) {
    throw UsageError("grid chooses zeta0 and zeta1 itself; drop --zeta0/--zeta1");
  }
  const Prepared base = prepare(f, cmd);
  ResponseDataset data = load_inputs(f.data, f.q);
  const Split split = split_dataset(data, {}, base.split_seed);
  fs::create_directories(out_dir);
  const auto grid = zeta_grid();

  auto run_one = [&](std::size_t i) -> int {
    Prepared p = base;
    p.train.zeta0 = grid[i].first;
    p.train.zeta1 = grid[i].second;
    p.train.seed = grid_seed(base.train.seed, i);
    const std::string stem = "run_" + std::to_string(i);
    TrainResult result;
    int code = kOk;
    std::string status = "ok";
    try {
      const Artifact a = train_artifact(data, split, p, {}, &result);
      save_artifact(a, fs::path(out_dir) / (stem + ".json"));
      write_epoch_log(result.log, fs::path(out_dir) / (stem + "_log.csv"));
    } catch (const NumericError& e) {
      code = kNumericError;
      status = "diverged";
      err << "run " << i << ": " << e.what() << '\n';
    }
    std::ofstream res(fs::path(out_dir) / (stem + ".result"));
    res << p.train.zeta0 << ',' << p.train.zeta1 << ',' << p.train.seed << ',' << result.best_epoch << ','
        << fmt(result.best_val_auc) << ',' << fmt(result.best_val_acc) << ',' << status << '\n';
    return code;
  };

  if (jobs == 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) run_one(i);
  } else {
    out.flush();
    err.flush();
    std::size_t next = 0;
    int running = 0;
    while (next < grid.size() || running > 0) {
      if (next < grid.size() && running < jobs) {
        std::cout.flush();
        std::cerr.flush();
        const pid_t pid = fork();
        if (pid < 0) throw std::runtime_error("fork failed");
        if (pid == 0) {
          int code = kOk;
          try {
            code = run_one(next);
          } catch (...) {
            code = 1;
          }
          std::_Exit(code);
        }
        ++next;
        ++running;
        continue;
      }
      int status = 0;
      if (wait(&status) > 0) --running;
    }
  }

  std::ofstream table(fs::path(out_dir) / "grid.csv");
  table << "zeta0,zeta1,seed,best_epoch,val_auc,val_acc,status\n";
  std::string best_line;
  double best_auc = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::ifstream res(fs::path(out_dir) / ("run_" + std::to_string(i) + ".result"));
    std::string line;
    if (!std::getline(res, line)) {
      line = std::to_string(grid[i].first) + ',' + std::to_string(grid[i].second) + ",,,,,failed";
    }
    table << line << '\n';
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() == 7 && cells[6] == "ok" && std::stod(cells[4]) > best_auc) {
      best_auc = std::stod(cells[4]);
      best_line = "best: zeta0 " + cells[0] + ", zeta1 " + cells[1] + ", val AUC " + cells[4] +
                  ", val Acc " + cells[5] + " (run_" + std::to_string(i) + ".json)";
    }
  }
  out << "grid: " << (fs::path(out_dir) / "grid.csv").string() << '\n';
  if (best_line.empty()) {
    out << "no run finished\n";
    return kNumericError;
  }
  out << best_line << '\n';
  return kOk;
}

void write_truth_csv(const SyntheticData& s, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "variable,row,col,value\n";
  for (const auto& [name, m] : s.truth) {
    for (Index c = 0; c < m.cols(); ++c) {
      for (Index r = 0; r < m.rows(); ++r) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
        out << name << ',' << r << ',' << c << ',' << buf << '\n';
      }
    }
  }
}

}  // namespace

void tune_allocator() {
#ifdef __GLIBC__
  // Tape nodes allocate and free large matrices every batch; keep them on the
  // heap instead of mapping and unmapping pages each time.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  tune_allocator();
  CLI::App app{"Variational cognitive diagnosis: train, evaluate, report and synthesize"};
  app.require_subcommand(1);

  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train a model and write an artifact");
  add_train_flags(train_cmd, train_flags, true);

  TrainFlags grid_flags;
  std::string grid_dir = "grid";
  int grid_jobs = 1;
  auto* grid_cmd = app.add_subcommand("grid", "train over the 4x4 zeta grid");
  add_train_flags(grid_cmd, grid_flags, false);
  grid_cmd->add_option("--out-dir", grid_dir)->capture_default_str();
  grid_cmd->add_option("--jobs", grid_jobs, "parallel worker processes")->capture_default_str();

  std::string eval_artifact, eval_data, eval_q, eval_subset = "test", eval_out;
  int eval_draws = 50;
  bool eval_mc = false;
  std::uint64_t eval_seed = 0;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate an artifact on a dataset");
  eval_cmd->add_option("--artifact", eval_artifact)->required();
  eval_cmd->add_option("--data", eval_data)->required();
  eval_cmd->add_option("--q", eval_q);
  eval_cmd->add_option("--subset", eval_subset, "test, validation, train or all")->capture_default_str();
  eval_cmd->add_option("--draws", eval_draws, "posterior draws for intervals and p_hat")->capture_default_str();
  eval_cmd->add_option("--seed", eval_seed)->capture_default_str();
  eval_cmd->add_flag("--mc-eval", eval_mc, "average posterior draws for AUC/Acc instead of using g(mu)");
  eval_cmd->add_option("--out", eval_out, "also write the metrics CSV here");

  std::string report_artifact, report_out, report_density;
  std::vector<std::string> report_students;
  auto* report_cmd = app.add_subcommand("report", "posterior summaries of selected students");
  report_cmd->add_option("--artifact", report_artifact)->required();
  report_cmd->add_option("--students", report_students, "student ids")->delimiter(',')->required();
  report_cmd->add_option("--out", report_out, "summary CSV (default: stdout)");
  report_cmd->add_option("--density", report_density, "density-curve CSV");

  SynthOptions synth;
  std::string synth_model = "irt", synth_dir = ".";
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset with known parameters");
  synth_cmd->add_option("--model", synth_model)->capture_default_str();
  synth_cmd->add_option("--students", synth.students)->capture_default_str();
  synth_cmd->add_option("--questions", synth.questions)->capture_default_str();
  synth_cmd->add_option("--concepts", synth.concepts)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--sparse-fraction", synth.sparse_fraction)->capture_default_str();
  synth_cmd->add_option("--sparse-questions", synth.sparse_questions)->capture_default_str();
  synth_cmd->add_option("--latent-dim", synth.model.latent_dim)->capture_default_str();
  synth_cmd->add_option("--hidden", synth.model.hidden)->delimiter(',')->expected(2);
  synth_cmd->add_option("--out-dir", synth_dir)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_flags, train_cmd, out, err);
    if (*grid_cmd) return cmd_grid(grid_flags, grid_cmd, grid_dir, grid_jobs, out, err);
    if (*eval_cmd) {
      const EvalSubset which = parse_eval_subset(eval_subset);
      if (eval_draws < 1) throw UsageError("--draws must be >= 1");
      const Artifact a = load_artifact(eval_artifact);
      ResponseDataset raw = load_inputs(eval_data, eval_q);
      for (const auto& w : raw.warnings) err << "warning: " << w << '\n';
      const ResponseDataset data = reindex(raw, a.students, a.questions);
      if (data.num_concepts() != a.shape.concepts) {
        throw DataError("Q-matrix has " + std::to_string(data.num_concepts()) + " concepts, artifact has " +
                        std::to_string(a.shape.concepts));
      }
      const EvalReport r = evaluate(a, data, which, eval_draws, eval_seed, eval_mc);
      write_eval_report(r, out);
      if (!eval_out.empty()) {
        std::ofstream f(eval_out);
        if (!f) throw DataError("cannot write " + eval_out);
        write_eval_report(r, f);
      }
      return kOk;
    }
    if (*report_cmd) {
      const Artifact a = load_artifact(report_artifact);
      const auto rows = posterior_report(a, report_students);
      std::ofstream file;
      if (!report_out.empty()) {
        file.open(report_out);
        if (!file) throw DataError("cannot write " + report_out);
      }
      std::ostream& dst = report_out.empty() ? out : file;
      dst << "student,dimension,value,lower,upper,sigma_model,sigma_data,sigma,tau\n";
      for (const auto& r : rows) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.value, r.interval.lower,
                      r.interval.upper, r.sigma_model, r.sigma_data, r.sigma, r.tau);
        dst << r.student << ',' << r.dimension << ',' << buf << '\n';
      }
      if (!report_density.empty()) {
        std::ofstream d(report_density);
        if (!d) throw DataError("cannot write " + report_density);
        d << "student,dimension,kind,x,density\n";
        for (const auto& p : density_curves(a, report_students)) {
          char buf[96];
          std::snprintf(buf, sizeof(buf), "%.17g,%.17g", p.x, p.density);
          d << p.student << ',' << p.dimension << ',' << (p.spike ? "spike" : "curve") << ',' << buf << '\n';
        }
      }
      return kOk;
    }
    if (*synth_cmd) {
      synth.model.kind = parse_model_kind(synth_model);
      const SyntheticData s = synthesize(synth);
      fs::create_directories(synth_dir);
      write_responses_csv(s.dataset, fs::path(synth_dir) / "responses.csv");
      write_qmatrix_csv(s.dataset, fs::path(synth_dir) / "qmatrix.csv");
      write_truth_csv(s, fs::path(synth_dir) / "truth.csv");
      out << "wrote " << s.dataset.responses.size() << " responses to " << synth_dir << '\n';
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const UndefinedStatistic& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsage;
}

}  // namespace ucd::cli
