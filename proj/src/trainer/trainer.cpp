#include "ucd/trainer/trainer.hpp"

#include "ucd/errors.hpp"
#include "ucd/eval/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace ucd {

std::string pi_schedule_name(PiSchedule s) {
  return s == PiSchedule::Geometric ? "geometric" : "uniform";
}

PiSchedule parse_pi_schedule(const std::string& name) {
  if (name == "geometric") return PiSchedule::Geometric;
  if (name == "uniform") return PiSchedule::Uniform;
  throw ConfigError("unknown pi schedule '" + name + "' (expected geometric or uniform)");
}

void TrainConfig::validate() const {
  if (mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
  if (zeta0 < 0.0 || zeta1 < 0.0) throw ConfigError("zeta0 and zeta1 must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (max_epochs < 1) throw ConfigError("epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

std::vector<double> batch_weights(std::size_t num_batches, PiSchedule schedule) {
  if (num_batches == 0) throw ConfigError("batch_weights needs at least one batch");
  std::vector<double> w(num_batches);
  if (schedule == PiSchedule::Uniform) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(num_batches));
  } else {
    // 2^(M-i) / (2^M - 1), evaluated as 2^-i / (1 - 2^-M) to stay finite for large M.
    const double m = static_cast<double>(num_batches);
    const double denom = -std::expm1(-m * std::log(2.0));
    for (std::size_t i = 0; i < num_batches; ++i) {
      w[i] = std::ldexp(1.0, -static_cast<int>(i + 1)) / denom;
    }
  }
  double head = 0.0;
  for (std::size_t i = 0; i + 1 < num_batches; ++i) head += w[i];
  w.back() = 1.0 - head;
  return w;
}

namespace {

struct BlockLeaves {
  grad::Var mu;
  grad::Var eta;
};

Eigen::RowVectorXd inverse_counts(const Eigen::VectorXd& counts, std::span<const grad::Index> idx) {
  Eigen::RowVectorXd w(static_cast<grad::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double c = counts.size() > 0 ? counts(idx[k]) : 1.0;
    w(static_cast<grad::Index>(k)) = 1.0 / std::max(c, 1.0);
  }
  return w;
}

}  // namespace

ObjectiveValue batch_objective(const DiagnosisModel& model, const Posterior& post,
                               const ResponseBatch& batch, const ObjectiveSettings& s,
                               NoiseSource& noise, bool with_gradient) {
  if (batch.size() == 0) throw UsageError("batch_objective on an empty batch");
  if (s.mc_samples < 1) throw ConfigError("mc_samples must be >= 1");

  grad::Tape tape;
  std::vector<std::array<grad::Var, 2>> lambda_raw;
  std::vector<std::array<grad::Var, 2>> lambda;
  for (const auto& l : post.lambdas) {
    const grad::Var r0 = tape.leaf(l.raw0);
    const grad::Var r1 = tape.leaf(l.raw1);
    lambda_raw.push_back({r0, r1});
    lambda.push_back({grad::softplus(r0), grad::softplus(r1)});
  }
  auto lambda_for = [&](int set) -> const std::array<grad::Var, 2>& {
    const auto idx = static_cast<std::size_t>(set);
    return lambda.at(idx < lambda.size() ? idx : 0);
  };

  std::vector<BlockLeaves> leaves;
  std::vector<grad::Var> centre;  // mu per sampled entry
  std::vector<grad::Var> sigma;   // effective sigma per sampled entry
  std::vector<grad::Var> kl_weight_rows;
  grad::Var kl_function;
  bool have_function_kl = false;
  grad::Var kl_diag;
  bool have_diag_kl = false;
  auto add_to = [](grad::Var& acc, bool& have, grad::Var term) {
    acc = have ? acc + term : term;
    have = true;
  };

  for (const auto& b : post.blocks) {
    BlockLeaves l{tape.leaf(b.mu), tape.leaf(b.eta)};
    leaves.push_back(l);
    if (b.role == VariableRole::Function) {
      const grad::Var sig = grad::softplus(l.eta);
      centre.push_back(l.mu);
      sigma.push_back(sig);
      add_to(kl_function, have_function_kl, grad::sum(kl_to_prior(l.mu, sig)));
      continue;
    }
    const auto& idx = b.role == VariableRole::Student ? batch.students : batch.questions;
    const auto& lam = lambda_for(b.lambda_set);
    const grad::Var mu_g = grad::gather_cols(l.mu, idx);
    const grad::Var tau_g = tape.constant(gather_columns(b.tau, idx));
    const grad::Var sig_m = grad::softplus(grad::gather_cols(l.eta, idx));
    const grad::Var sig = sig_m * (lam[0] * grad::exp(-(lam[1] * tau_g)));
    centre.push_back(mu_g);
    sigma.push_back(sig);
    if (s.kl_exact) {
      const grad::Var full_sig =
          grad::softplus(l.eta) * (lam[0] * grad::exp(-(lam[1] * tape.constant(b.tau))));
      add_to(kl_diag, have_diag_kl, grad::sum(kl_to_prior(l.mu, full_sig)));
    } else {
      const Eigen::RowVectorXd w =
          inverse_counts(b.role == VariableRole::Student ? s.student_counts : s.question_counts, idx) *
          static_cast<double>(s.num_batches);
      add_to(kl_diag, have_diag_kl,
             grad::sum(grad::mul_row(kl_to_prior(mu_g, sig), tape.constant(grad::Matrix(w)))));
    }
  }

  grad::Var log_lik;
  bool have_ll = false;
  for (int m = 0; m < s.mc_samples; ++m) {
    SampledVariables vars;
    for (std::size_t i = 0; i < post.blocks.size(); ++i) {
      const auto& b = post.blocks[i];
      grad::Matrix eps(centre[i].rows(), centre[i].cols());
      noise.fill(eps);
      const grad::Var z = centre[i] + sigma[i] * tape.constant(std::move(eps));
      vars.emplace(b.name, b.transform.to_domain(z));
    }
    const grad::Var logits = model.logits(tape, vars, batch.q_columns);
    add_to(log_lik, have_ll, log_likelihood_sum(logits, batch.labels));
  }
  const grad::Var lb = log_lik * (1.0 / static_cast<double>(s.mc_samples));

  grad::Var kl_total = tape.constant(0.0);
  if (have_diag_kl) kl_total = kl_total + s.zeta0 * kl_diag;
  if (have_function_kl) kl_total = kl_total + s.zeta1 * kl_function;
  const grad::Var loss = s.pi * kl_total - lb;

  ObjectiveValue out;
  out.loss = loss.scalar();
  out.log_likelihood = lb.scalar();
  out.kl_diagnostic = have_diag_kl ? kl_diag.scalar() : 0.0;
  out.kl_function = have_function_kl ? kl_function.scalar() : 0.0;
  if (with_gradient) {
    tape.backward(loss);
    PosteriorGradient g;
    for (const auto& l : leaves) {
      g.mu.push_back(l.mu.grad());
      g.eta.push_back(l.eta.grad());
    }
    for (const auto& r : lambda_raw) g.lambda_raw.push_back({r[0].grad()(0, 0), r[1].grad()(0, 0)});
    out.gradient = std::move(g);
  }
  return out;
}

AdamOptimizer::AdamOptimizer(const Posterior& shape, double learning_rate, AdamConfig config)
    : lr_(learning_rate), cfg_(config) {
  for (const auto& b : shape.blocks) {
    m_.mu.push_back(grad::Matrix::Zero(b.rows(), b.cols()));
    m_.eta.push_back(grad::Matrix::Zero(b.rows(), b.cols()));
  }
  m_.lambda_raw.assign(shape.lambdas.size(), {0.0, 0.0});
  v_ = m_;
}

void AdamOptimizer::step(Posterior& post, const PosteriorGradient& g) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  auto update = [&](grad::Matrix& x, grad::Matrix& m, grad::Matrix& v, const grad::Matrix& grad) {
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    x.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.epsilon);
  };
  for (std::size_t i = 0; i < post.blocks.size(); ++i) {
    update(post.blocks[i].mu, m_.mu[i], v_.mu[i], g.mu[i]);
    update(post.blocks[i].eta, m_.eta[i], v_.eta[i], g.eta[i]);
  }
  for (std::size_t s = 0; s < post.lambdas.size(); ++s) {
    double* raw[2] = {&post.lambdas[s].raw0, &post.lambdas[s].raw1};
    for (int k = 0; k < 2; ++k) {
      double& m = m_.lambda_raw[s][static_cast<std::size_t>(k)];
      double& v = v_.lambda_raw[s][static_cast<std::size_t>(k)];
      const double gr = g.lambda_raw[s][static_cast<std::size_t>(k)];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * gr;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * gr * gr;
      *raw[k] -= lr_ * (m / c1) / (std::sqrt(v / c2) + cfg_.epsilon);
    }
  }
}

TrainResult train(const DiagnosisModel& model, const ResponseDataset& data, const Split& split,
                  const TrainConfig& config, const InitOptions& init, const EpochCallback& on_epoch) {
  config.validate();
  if (split.train.empty()) throw ConfigError("training split is empty");
  if (split.validation.empty()) throw ConfigError("validation split is empty");
  const auto start = std::chrono::steady_clock::now();

  std::mt19937_64 init_rng(config.seed);
  TrainResult result;
  Posterior post = initialize_posterior(model, data.shape(), init, init_rng);
  const ResponseCounts counts = count_responses(data, split.train);
  assign_tau(post, model.kind(), counts);

  GaussianNoise noise(config.seed ^ 0x5DEECE66DULL);
  std::mt19937_64 shuffle_rng(config.seed + 1);
  AdamOptimizer adam(post, config.learning_rate, config.adam);

  ObjectiveSettings settings;
  settings.mc_samples = config.mc_samples;
  settings.zeta0 = config.zeta0;
  settings.zeta1 = config.zeta1;
  settings.kl_exact = config.kl_exact;
  settings.student_counts = counts.student;
  settings.question_counts = counts.question;

  const ResponseBatch validation = make_batch(data, split.validation);
  std::vector<int> val_labels;
  for (const std::size_t i : split.validation) val_labels.push_back(data.responses[i].correct);

  std::vector<std::size_t> order = split.train;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  const std::size_t num_batches = (order.size() + batch_size - 1) / batch_size;
  const auto weights = batch_weights(num_batches, config.pi_schedule);
  settings.num_batches = num_batches;

  result.posterior = post;
  result.best_val_auc = -1.0;
  int stale = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t bi = 0; bi < num_batches; ++bi) {
      const std::size_t lo = bi * batch_size;
      const std::size_t hi = std::min(order.size(), lo + batch_size);
      const ResponseBatch batch = make_batch(data, std::span(order).subspan(lo, hi - lo));
      settings.pi = weights[bi];
      ObjectiveValue value;
      try {
        value = batch_objective(model, post, batch, settings, noise, true);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(bi + 1) + ": " + e.what());
      }
      if (!std::isfinite(value.loss)) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(bi + 1) + ": loss " + std::to_string(value.loss) +
                           ", log-likelihood " + std::to_string(value.log_likelihood) +
                           ", KL(Phi) " + std::to_string(value.kl_diagnostic) + ", KL(Omega) " +
                           std::to_string(value.kl_function));
      }
      adam.step(post, *value.gradient);
      epoch_loss += value.loss;
    }

    const Eigen::RowVectorXd p = predict_center(model, post, validation);
    const std::vector<double> preds(p.data(), p.data() + p.size());
    const PointScores scores = auc_acc(preds, val_labels);
    EpochLog entry{epoch, epoch_loss, scores.auc.value_or(0.5), scores.acc};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    const bool better = entry.val_auc > result.best_val_auc ||
                        (entry.val_auc == result.best_val_auc && entry.val_acc > result.best_val_acc);
    if (better) {
      result.best_val_auc = entry.val_auc;
      result.best_val_acc = entry.val_acc;
      result.best_epoch = epoch;
      result.posterior = post;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_epoch_log(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,train_loss,val_auc,val_acc\n";
  char line[160];
  for (const auto& e : log) {
    std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f\n", e.epoch, e.train_loss, e.val_auc, e.val_acc);
    out << line;
  }
}

}  // namespace ucd
