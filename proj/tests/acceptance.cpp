// Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion. The exit
// status is nonzero when a criterion that could be evaluated fails; criteria
// whose dataset is missing are reported as FAIL with the reason but do not
// affect the status.

#include "oracles.hpp"

#include "ucd/cli/commands.hpp"
#include "ucd/eval/metrics.hpp"
#include "ucd/trainer/trainer.hpp"
#include "ucd/varparam/variational.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

using namespace ucd;
using namespace ucd::testing;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  bool evaluated = true;
  std::string detail;
};

// Collects named checks; the verdict passes when all of them do.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    pass_ = pass_ && ok;
    if (!parts_.empty()) parts_ += "; ";
    parts_ += (ok ? "" : "NOT ") + what;
  }
  Verdict verdict() const { return {pass_, true, parts_}; }

 private:
  bool pass_ = true;
  std::string parts_;
};

std::string fmt(double x, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- FrcSub -----------------------------------------------------------------

struct FrcSubPaths {
  fs::path responses;
  fs::path qmatrix;
};

std::optional<FrcSubPaths> find_frcsub() {
  std::vector<fs::path> roots;
  if (const char* env = std::getenv("UCD_FRCSUB_DIR")) roots.emplace_back(env);
  roots.push_back(fs::path(UCD_SOURCE_DIR) / "data" / "frcsub");
  for (const auto& r : roots) {
    if (fs::exists(r / "responses.csv") && fs::exists(r / "qmatrix.csv")) {
      return FrcSubPaths{r / "responses.csv", r / "qmatrix.csv"};
    }
  }
  return std::nullopt;
}

struct FrcSubRun {
  cli::EvalReport report;
  double seconds = 0.0;
};

// Trains with M_c = 5, lr 0.002 and zeta0 = zeta1 = 1,
// and evaluates on the held-out test split.
FrcSubRun run_frcsub(ModelKind kind, const ResponseDataset& data) {
  Artifact a;
  a.model.kind = kind;
  a.shape = data.shape();
  a.students = data.students;
  a.questions = data.questions;
  a.concepts = data.concepts;
  a.split_seed = 2024;
  a.train.seed = 2024;
  a.train.max_epochs = 100;
  a.train.patience = 10;
  const auto split = split_dataset(data, a.ratios, a.split_seed);
  const auto model = make_model(a.model);
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = train(*model, data, split, a.train);
  FrcSubRun run;
  run.seconds = seconds_since(t0);
  a.posterior = result.posterior;
  run.report = cli::evaluate(a, data, cli::EvalSubset::Test, 50, 2024);
  return run;
}

struct FrcSubResults {
  std::optional<std::string> missing;
  FrcSubRun irt;
  FrcSubRun ncdm;
};

const FrcSubResults& frcsub() {
  static const FrcSubResults results = [] {
    FrcSubResults r;
    const auto paths = find_frcsub();
    if (!paths) {
      r.missing = "FrcSub not found (set UCD_FRCSUB_DIR or place responses.csv and qmatrix.csv in data/frcsub)";
      return r;
    }
    const auto data = load_dataset(paths->responses, paths->qmatrix);
    r.irt = run_frcsub(ModelKind::Irt, data);
    r.ncdm = run_frcsub(ModelKind::NeuralCdm, data);
    return r;
  }();
  return results;
}

Verdict unavailable(const std::string& why) { return {false, false, why}; }

Verdict criterion1() {
  const auto& f = frcsub();
  if (f.missing) return unavailable(*f.missing);
  Checks c;
  const double irt_auc = f.irt.report.auc.value_or(0.0);
  const double ncdm_auc = f.ncdm.report.auc.value_or(0.0);
  c.expect(irt_auc >= 0.85, "U-IRT AUC " + fmt(irt_auc) + " >= 0.85");
  c.expect(f.irt.report.acc >= 0.77, "U-IRT Acc " + fmt(f.irt.report.acc) + " >= 0.77");
  c.expect(ncdm_auc >= 0.86, "U-NeuralCDM AUC " + fmt(ncdm_auc) + " >= 0.86");
  c.expect(f.irt.seconds <= 600.0, "U-IRT " + fmt(f.irt.seconds, 0) + " s <= 600 s");
  c.expect(f.ncdm.seconds <= 600.0, "U-NeuralCDM " + fmt(f.ncdm.seconds, 0) + " s <= 600 s");
  return c.verdict();
}

Verdict criterion2() {
  const auto& f = frcsub();
  if (f.missing) return unavailable(*f.missing);
  Checks c;
  const auto& irt = f.irt.report.intervals;
  const auto& ncdm = f.ncdm.report.intervals;
  c.expect(irt.picp >= 0.92 && irt.picp <= 0.98, "U-IRT PICP " + fmt(irt.picp) + " in [0.92, 0.98]");
  c.expect(irt.piaw <= 0.45, "U-IRT PIAW " + fmt(irt.piaw) + " <= 0.45");
  c.expect(ncdm.picp >= 0.91 && ncdm.picp <= 0.98, "U-NeuralCDM PICP " + fmt(ncdm.picp) + " in [0.91, 0.98]");
  return c.verdict();
}

// ---- synthetic uncertainty correlation --------------------------------------

// 200 x 30 IRT responses where student i keeps a random subset of n_i
// questions, n_i uniform on [3, 30].
ResponseDataset heterogeneous_irt(std::uint64_t seed) {
  SynthOptions o;
  o.students = 200;
  o.questions = 30;
  o.concepts = 1;
  o.seed = seed;
  const auto full = synthesize(o).dataset;
  std::mt19937_64 rng(seed + 1);
  std::uniform_int_distribution<int> keep(3, 30);
  std::vector<int> budget(static_cast<std::size_t>(full.num_students()));
  for (auto& b : budget) b = keep(rng);
  std::vector<std::size_t> order(full.responses.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> kept(full.responses.size(), false);
  for (const auto i : order) {
    auto& b = budget[static_cast<std::size_t>(full.responses[i].student)];
    if (b > 0) {
      kept[i] = true;
      --b;
    }
  }
  ResponseDataset out = full;
  out.responses.clear();
  for (std::size_t i = 0; i < full.responses.size(); ++i) {
    if (kept[i]) out.responses.push_back(full.responses[i]);
  }
  return out;
}

Verdict criterion3() {
  Checks c;
  const auto& f = frcsub();
  if (f.missing) {
    c.expect(false, "U-NeuralCDM FrcSub part not run: " + *f.missing);
  } else {
    const auto& corr = f.ncdm.report.uncertainty.sigma_vs_count;
    c.expect(corr.value && *corr.value <= -0.8,
             "U-NeuralCDM FrcSub spearman(sigma, count) " + (corr.value ? fmt(*corr.value) : corr.note) + " <= -0.8");
  }

  const auto data = heterogeneous_irt(17);
  const auto split = split_dataset(data, {}, 17);
  TrainConfig cfg;
  cfg.seed = 17;
  cfg.max_epochs = 100;
  cfg.patience = 10;
  const auto model = make_model({});
  const auto result = train(*model, data, split, cfg);
  GaussianNoise noise(17);
  const auto a = uncertainty_correlations(*model, result.posterior, data, split.train, 50, noise);
  const auto& corr = a.sigma_vs_count;
  c.expect(corr.value && *corr.value <= -0.6,
           "synthetic U-IRT spearman(sigma, count) " + (corr.value ? fmt(*corr.value) : corr.note) + " <= -0.6");
  Verdict v = c.verdict();
  // The synthetic half can be judged on its own; the FrcSub half needs the data.
  if (f.missing) v.evaluated = !(corr.value && *corr.value <= -0.6);
  return v;
}

Verdict criterion4() {
  const auto& f = frcsub();
  if (f.missing) return unavailable(*f.missing);
  Checks c;
  const auto& corr = f.ncdm.report.uncertainty.model_sigma_vs_distance;
  c.expect(corr.value && *corr.value >= 0.6,
           "U-NeuralCDM spearman(sigma_m, distance) " + (corr.value ? fmt(*corr.value) : corr.note) + " >= 0.6");
  return c.verdict();
}

// ---- sampling, gradients, KL --------------------------------------------------

Verdict criterion5() {
  Checks c;
  constexpr int kSamples = 100000;
  const std::vector<DomainTransform> transforms = {DomainTransform::real(), DomainTransform::half_line(),
                                                   DomainTransform::interval()};
  int moment_failures = 0;
  for (const auto& t : transforms) {
    for (const auto& [mu, sigma] : std::vector<std::pair<double, double>>{{0.35, 0.8}, {-1.2, 0.3}, {2.0, 1.5}}) {
      const VariationalVariable v{mu, softplus_inverse(sigma), t, std::nullopt};
      std::mt19937_64 rng(31);
      std::normal_distribution<double> eps(0.0, 1.0);
      double mean = 0.0, m2 = 0.0;
      for (int k = 0; k < kSamples; ++k) {
        const double z = t.to_unconstrained(sample(v, sigma, eps(rng)));
        const double d = z - mean;
        mean += d / (k + 1);
        m2 += d * (z - mean);
      }
      const double var = m2 / (kSamples - 1);
      if (std::abs(mean - mu) > 3.0 * sigma / std::sqrt(kSamples)) ++moment_failures;
      if (std::abs(var - sigma * sigma) > 3.0 * sigma * sigma * std::sqrt(2.0 / (kSamples - 1))) ++moment_failures;
    }
  }
  c.expect(moment_failures == 0, "h(samples) mean/variance within 3 SE (" + std::to_string(moment_failures) +
                                     " of 18 outside)");

  constexpr int kDraws = 2000;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  grad::Matrix eps(1, kDraws);
  for (grad::Index k = 0; k < kDraws; ++k) eps(0, k) = normal(rng);
  double worst = 0.0;
  for (const auto& t : transforms) {
    auto objective = [&](double mu, double eta) {
      double acc = 0.0;
      for (grad::Index k = 0; k < kDraws; ++k) {
        acc += grad::stable_log_sigmoid(1.3 * t.to_domain(mu + softplus(eta) * eps(0, k)) - 0.4);
      }
      return acc / kDraws;
    };
    const double mu0 = 0.1, eta0 = -0.3;
    grad::Tape tape;
    const grad::Var mu = tape.leaf(mu0);
    const grad::Var eta = tape.leaf(eta0);
    const grad::Var z = mu + grad::softplus(eta) * tape.constant(eps);
    tape.backward(grad::sum(grad::log_sigmoid(1.3 * t.to_domain(z) - 0.4)) / kDraws);
    const double h = 1e-5;
    const double d_mu = (objective(mu0 + h, eta0) - objective(mu0 - h, eta0)) / (2 * h);
    const double d_eta = (objective(mu0, eta0 + h) - objective(mu0, eta0 - h)) / (2 * h);
    worst = std::max(worst, std::abs(mu.grad()(0, 0) - d_mu) / std::abs(d_mu));
    worst = std::max(worst, std::abs(eta.grad()(0, 0) - d_eta) / std::abs(d_eta));
  }
  c.expect(worst <= 1e-3, "reparameterized gradient max rel err " + fmt(worst, 6) + " <= 1e-3");
  return c.verdict();
}

Verdict criterion6() {
  Checks c;
  int checked = 0, bad = 0;
  for (int e = 0; e < 120; ++e) {
    const RandomExpression expr{static_cast<std::uint64_t>(5000 + e), 1 + e % 10};
    std::vector<grad::Matrix> values = expr.inputs();
    grad::Tape t;
    std::vector<grad::Var> leaves;
    for (const auto& v : values) leaves.push_back(t.leaf(v));
    t.backward(expr.build(t, leaves));
    for (std::size_t l = 0; l < values.size(); ++l) {
      for (grad::Index i = 0; i < values[l].size(); ++i) {
        const double saved = values[l].data()[i];
        values[l].data()[i] = saved + 1e-5;
        const double up = expr.eval(values);
        values[l].data()[i] = saved - 1e-5;
        const double down = expr.eval(values);
        values[l].data()[i] = saved;
        bad += !gradient_close(leaves[l].grad().data()[i], (up - down) / 2e-5);
        ++checked;
      }
    }
  }
  c.expect(bad == 0, "120 random expressions, " + std::to_string(bad) + " of " + std::to_string(checked) +
                         " partials off");

  // Full batch objective of U-NeuralCDM and U-IRT on three students.
  int obj_checked = 0, obj_bad = 0;
  for (const auto kind : {ModelKind::Irt, ModelKind::NeuralCdm}) {
    ResponseDataset d;
    const std::tuple<const char*, const char*, int> rows[] = {
        {"a", "q1", 1}, {"a", "q2", 0}, {"b", "q1", 0}, {"b", "q3", 1}, {"c", "q2", 1}, {"c", "q3", 1}, {"a", "q3", 0}};
    for (const auto& [s, j, r] : rows) d.responses.push_back({d.students.intern(s), d.questions.intern(j), r});
    d.q_matrix = grad::Matrix(3, 2);
    d.q_matrix << 1, 0, 0, 1, 1, 1;
    d.concepts = {"k0", "k1"};
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.hidden = {3, 2};
    const auto model = make_model(cfg);
    std::mt19937_64 rng(21);
    Posterior post = initialize_posterior(*model, d.shape(), {}, rng);
    std::vector<std::size_t> all(d.responses.size());
    std::iota(all.begin(), all.end(), 0);
    const auto counts = count_responses(d, all);
    assign_tau(post, kind, counts);
    std::normal_distribution<double> n(0.0, 0.3);
    for (auto& b : post.blocks) {
      for (grad::Index i = 0; i < b.mu.size(); ++i) b.mu.data()[i] += n(rng);
      for (grad::Index i = 0; i < b.eta.size(); ++i) b.eta.data()[i] += n(rng);
    }
    ObjectiveSettings s;
    s.mc_samples = 3;
    s.pi = 0.4;
    s.num_batches = 2;
    s.student_counts = counts.student;
    s.question_counts = counts.question;
    const auto batch = make_batch(d, all);
    const GaussianNoise noise(5);
    auto f = [&] {
      GaussianNoise copy = noise;
      return batch_objective(*model, post, batch, s, copy, false).loss;
    };
    GaussianNoise copy = noise;
    const auto g = *batch_objective(*model, post, batch, s, copy, true).gradient;
    auto check = [&](double& x, double analytic) {
      const double saved = x;
      x = saved + 1e-6;
      const double up = f();
      x = saved - 1e-6;
      const double down = f();
      x = saved;
      obj_bad += !gradient_close(analytic, (up - down) / 2e-6);
      ++obj_checked;
    };
    for (std::size_t bi = 0; bi < post.blocks.size(); ++bi) {
      auto& b = post.blocks[bi];
      for (grad::Index i = 0; i < b.mu.size(); ++i) check(b.mu.data()[i], g.mu[bi].data()[i]);
      for (grad::Index i = 0; i < b.eta.size(); ++i) check(b.eta.data()[i], g.eta[bi].data()[i]);
    }
    for (std::size_t l = 0; l < post.lambdas.size(); ++l) {
      check(post.lambdas[l].raw0, g.lambda_raw[l][0]);
      check(post.lambdas[l].raw1, g.lambda_raw[l][1]);
    }
  }
  c.expect(obj_bad == 0, "3-student batch objective, " + std::to_string(obj_bad) + " of " +
                             std::to_string(obj_checked) + " partials off");
  return c.verdict();
}

Verdict criterion7() {
  boost::math::quadrature::tanh_sinh<double> unit;
  boost::math::quadrature::exp_sinh<double> half;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> mu(-2.0, 2.0), sigma(0.2, 2.0);
  auto integrand = [](auto log_q, auto log_p) {
    return [=](double x) {
      const double lq = log_q(x);
      if (!std::isfinite(lq) || lq < -700.0) return 0.0;
      return std::exp(lq) * (lq - log_p(x));
    };
  };
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double m = mu(rng), s = sigma(rng);
    const double closed = kl_to_prior(m, s);
    const auto fi = integrand([=](double x) { return log_logit_normal(x, m, s); },
                              [](double x) { return log_logit_normal(x, 0.0, 1.0); });
    const auto fh = integrand([=](double x) { return log_log_normal(x, m, s); },
                              [](double x) { return log_log_normal(x, 0.0, 1.0); });
    worst = std::max(worst, std::abs(unit.integrate(fi, 0.0, 1.0) - closed));
    worst = std::max(worst, std::abs(half.integrate(fh, 0.0, std::numeric_limits<double>::infinity()) - closed));
  }
  Checks c;
  c.expect(worst <= 1e-4, "50 pairs, logit-normal and log-normal, max |err| " + fmt(worst, 8) + " <= 1e-4");
  return c.verdict();
}

// ---- synthetic recovery --------------------------------------------------------

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Verdict criterion8() {
  SynthOptions o;
  o.students = 200;
  o.questions = 30;
  o.concepts = 1;
  o.seed = 8;
  o.sparse_fraction = 0.5;
  o.sparse_questions = 6;
  const auto syn = synthesize(o);
  const auto split = split_dataset(syn.dataset, {}, 8);
  TrainConfig cfg;
  cfg.seed = 8;
  cfg.max_epochs = 100;
  cfg.patience = 10;
  const auto model = make_model({});
  const auto r = train(*model, syn.dataset, split, cfg);

  const auto& alpha = r.posterior.block("alpha");
  const grad::Matrix& truth = syn.truth.at("alpha");
  const std::vector<double> mu(alpha.mu.data(), alpha.mu.data() + alpha.mu.size());
  const std::vector<double> tr(truth.data(), truth.data() + truth.size());
  const double corr = brute_pearson(mu, tr);

  const grad::Matrix sigma = r.posterior.effective_sigma(alpha);
  std::vector<double> sparse, dense;
  std::vector<double> per_student(static_cast<std::size_t>(syn.dataset.num_students()), 0.0);
  for (const auto& resp : syn.dataset.responses) per_student[static_cast<std::size_t>(resp.student)] += 1.0;
  for (Index s = 0; s < alpha.cols(); ++s) {
    (per_student[static_cast<std::size_t>(s)] <= 6.0 ? sparse : dense).push_back(sigma(0, s));
  }
  Checks c;
  c.expect(corr >= 0.8, "Pearson(mu_alpha, alpha_true) " + fmt(corr) + " >= 0.8");
  const double ms = median(sparse), md = median(dense);
  c.expect(ms > md, "median sigma " + fmt(ms, 4) + " (" + std::to_string(sparse.size()) + " students, 6 responses) > " +
                        fmt(md, 4) + " (" + std::to_string(dense.size()) + " students, 30 responses)");
  return c.verdict();
}

// ---- metric oracles --------------------------------------------------------------

Verdict criterion9() {
  Checks c;
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> level(0, 9);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 6 + static_cast<std::size_t>(trial) * 5;
    std::vector<double> p(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = level(rng) / 10.0;
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    worst = std::max(worst, std::abs(auc(p, y) - brute_auc(p, y)));
  }
  c.expect(worst <= 1e-12, "AUC vs pairwise brute force on 20 fixtures, max |err| " + fmt(worst, 15));

  const std::vector<PredictionInterval> one = {{0.6, 0.8}};
  const bool single = picp_piaw(one, std::vector<int>{1}).picp == 1.0 && picp_piaw(one, std::vector<int>{0}).picp == 0.0;
  const std::vector<PredictionInterval> two = {{0.2, 0.5}, {0.4, 0.6}};
  const auto s = picp_piaw(two, std::vector<int>{0, 1});
  c.expect(single && s.picp == 1.0 && std::abs(s.piaw - 0.25) < 1e-12,
           "PICP/PIAW fixtures (PICP " + fmt(s.picp, 2) + ", PIAW " + fmt(s.piaw, 2) + ")");

  const std::vector<double> a = {3, 1, 3, 2, 2, 2, 5, 1};
  const std::vector<double> b = {0.5, 0.5, 0.9, 0.1, 0.3, 0.3, 0.3, 0.7};
  const double rho = spearman(a, b);
  const double expected = brute_pearson(brute_ranks(a), brute_ranks(b));
  c.expect(std::abs(rho - expected) <= 1e-12, "Spearman with ties " + fmt(rho, 6) + " vs brute force " + fmt(expected, 6));
  return c.verdict();
}

}  // namespace

int main() {
  const std::vector<std::function<Verdict()>> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                          criterion6, criterion7, criterion8, criterion9};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v = {false, true, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %zu: %s (%s) [%.1f s]\n", i + 1, v.pass ? "PASS" : "FAIL", v.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    if (!v.pass && v.evaluated) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
