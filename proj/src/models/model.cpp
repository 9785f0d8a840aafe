#include "ucd/models/model.hpp"

#include "ucd/errors.hpp"

#include <cmath>

namespace ucd {

namespace {

constexpr double kIrtScale = 1.7;

const grad::Var& lookup(const SampledVariables& vars, const std::string& name) {
  auto it = vars.find(name);
  if (it == vars.end()) throw UsageError("interaction function is missing variable '" + name + "'");
  return it->second;
}

class IrtModel final : public DiagnosisModel {
 public:
  explicit IrtModel(ModelConfig c) : DiagnosisModel(std::move(c)) {}

  ModelKind kind() const override { return ModelKind::Irt; }

  std::vector<VariableSpec> manifest(const DatasetShape& s) const override {
    return {
        {"alpha", VariableRole::Student, DomainTransform::real(), 1, s.students},
        {"beta_diff", VariableRole::Question, DomainTransform::real(), 1, s.questions},
        {"beta_disc", VariableRole::Question, DomainTransform::half_line(0.0), 1, s.questions},
    };
  }

  grad::Var logits(grad::Tape&, const SampledVariables& vars, const grad::Matrix&) const override {
    const grad::Var alpha = lookup(vars, "alpha");
    const grad::Var diff = lookup(vars, "beta_diff");
    const grad::Var disc = lookup(vars, "beta_disc");
    return kIrtScale * (disc * (alpha - diff));
  }
};

class MirtModel final : public DiagnosisModel {
 public:
  explicit MirtModel(ModelConfig c) : DiagnosisModel(std::move(c)) {
    if (config_.latent_dim < 1) throw ConfigError("MIRT latent dimension must be >= 1");
  }

  ModelKind kind() const override { return ModelKind::Mirt; }

  std::vector<VariableSpec> manifest(const DatasetShape& s) const override {
    const grad::Index d = config_.latent_dim;
    return {
        {"alpha", VariableRole::Student, DomainTransform::real(), d, s.students},
        {"a", VariableRole::Question, DomainTransform::half_line(0.0), d, s.questions},
        {"d", VariableRole::Question, DomainTransform::real(), 1, s.questions},
    };
  }

  grad::Var logits(grad::Tape&, const SampledVariables& vars, const grad::Matrix&) const override {
    const grad::Var alpha = lookup(vars, "alpha");
    const grad::Var a = lookup(vars, "a");
    const grad::Var d = lookup(vars, "d");
    return grad::col_sum(a * alpha) + d;
  }
};

class NeuralCdmModel final : public DiagnosisModel {
 public:
  explicit NeuralCdmModel(ModelConfig c) : DiagnosisModel(std::move(c)) {
    if (config_.hidden.size() != 2 || config_.hidden[0] < 1 || config_.hidden[1] < 1) {
      throw ConfigError("NeuralCDM needs exactly two positive hidden widths");
    }
  }

  ModelKind kind() const override { return ModelKind::NeuralCdm; }

  std::vector<VariableSpec> manifest(const DatasetShape& s) const override {
    const grad::Index k = s.concepts;
    const grad::Index h1 = config_.hidden[0];
    const grad::Index h2 = config_.hidden[1];
    const auto unit = DomainTransform::interval(0.0, 1.0);
    const auto positive = DomainTransform::half_line(0.0);
    const auto real = DomainTransform::real();
    return {
        {"alpha", VariableRole::Student, unit, k, s.students},
        {"beta_diff", VariableRole::Question, unit, k, s.questions},
        {"beta_disc", VariableRole::Question, unit, 1, s.questions},
        {"W1", VariableRole::Function, positive, h1, k},
        {"b1", VariableRole::Function, real, h1, 1},
        {"W2", VariableRole::Function, positive, h2, h1},
        {"b2", VariableRole::Function, real, h2, 1},
        {"W3", VariableRole::Function, positive, 1, h2},
        {"b3", VariableRole::Function, real, 1, 1},
    };
  }

  grad::Var logits(grad::Tape& tape, const SampledVariables& vars,
                   const grad::Matrix& q_columns) const override {
    const grad::Var alpha = lookup(vars, "alpha");
    const grad::Var diff = lookup(vars, "beta_diff");
    const grad::Var disc = lookup(vars, "beta_disc");
    const grad::Var q = tape.constant(q_columns);
    const grad::Var x = grad::mul_row(q * (alpha - diff), disc);
    const grad::Var f1 = grad::sigmoid(grad::affine(lookup(vars, "W1"), x, lookup(vars, "b1")));
    const grad::Var f2 = grad::sigmoid(grad::affine(lookup(vars, "W2"), f1, lookup(vars, "b2")));
    return grad::affine(lookup(vars, "W3"), f2, lookup(vars, "b3"));
  }
};

}  // namespace

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Irt: return "irt";
    case ModelKind::Mirt: return "mirt";
    case ModelKind::NeuralCdm: return "neuralcdm";
  }
  return "irt";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "irt") return ModelKind::Irt;
  if (name == "mirt") return ModelKind::Mirt;
  if (name == "neuralcdm" || name == "ncdm") return ModelKind::NeuralCdm;
  throw ConfigError("unknown model '" + name + "' (expected irt, mirt or neuralcdm)");
}

std::unique_ptr<DiagnosisModel> make_model(const ModelConfig& config) {
  switch (config.kind) {
    case ModelKind::Irt: return std::make_unique<IrtModel>(config);
    case ModelKind::Mirt: return std::make_unique<MirtModel>(config);
    case ModelKind::NeuralCdm: return std::make_unique<NeuralCdmModel>(config);
  }
  throw ConfigError("unknown model kind");
}

Posterior initialize_posterior(const DiagnosisModel& model, const DatasetShape& shape,
                               const InitOptions& options, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Posterior post;
  const double diag_eta = softplus_inverse(options.diagnostic_sigma);
  const double func_eta = softplus_inverse(options.function_sigma);
  int positive_layers = 0;
  for (const auto& spec : model.manifest(shape)) {
    VariableBlock b;
    b.name = spec.name;
    b.role = spec.role;
    b.transform = spec.transform;
    b.mu.resize(spec.rows, spec.cols);
    if (spec.role == VariableRole::Function) {
      b.eta = grad::Matrix::Constant(spec.rows, spec.cols, func_eta);
      if (spec.transform.kind() == DomainKind::HalfLine) {
        // Kaiming-normal draw with fan_in = columns, then mu = ln|W|.
        const double std_dev = std::sqrt(2.0 / static_cast<double>(spec.cols));
        for (grad::Index i = 0; i < b.mu.size(); ++i) {
          double w = std::abs(normal(rng) * std_dev);
          if (w < 1e-12) w = 1e-12;
          b.mu.data()[i] = std::log(w);
        }
        ++positive_layers;
      } else {
        b.mu.setZero();
        // Layers fed by sigmoid outputs: bias = -0.5 * row sums of exp(mu_W).
        if (options.center_hidden_biases && positive_layers > 1 && !post.blocks.empty() &&
            post.blocks.back().transform.kind() == DomainKind::HalfLine &&
            post.blocks.back().rows() == spec.rows) {
          b.mu.col(0) = -0.5 * post.blocks.back().mu.array().exp().rowwise().sum().matrix();
        }
      }
    } else {
      b.eta = grad::Matrix::Constant(spec.rows, spec.cols, diag_eta);
      for (grad::Index i = 0; i < b.mu.size(); ++i) {
        b.mu.data()[i] = options.diagnostic_mu_std * normal(rng);
      }
      b.tau = grad::Matrix::Zero(spec.rows, spec.cols);
      b.lambda_set = (spec.role == VariableRole::Question && !options.shared_lambdas) ? 1 : 0;
    }
    post.blocks.push_back(std::move(b));
  }
  const auto lambdas = LambdaParams::from_values(options.lambda0, options.lambda1);
  post.lambdas.assign(options.shared_lambdas ? 1 : 2, lambdas);
  return post;
}

double irt_predict(double alpha, double beta_diff, double beta_disc) {
  return grad::stable_sigmoid(kIrtScale * beta_disc * (alpha - beta_diff));
}

double mirt_predict(std::span<const double> alpha, std::span<const double> a, double d) {
  if (alpha.size() != a.size()) {
    throw UsageError("mirt_predict: alpha has " + std::to_string(alpha.size()) +
                     " dimensions but a has " + std::to_string(a.size()));
  }
  double z = d;
  for (std::size_t k = 0; k < a.size(); ++k) z += a[k] * alpha[k];
  return grad::stable_sigmoid(z);
}

double neuralcdm_predict(std::span<const double> alpha, std::span<const double> beta_diff,
                         double beta_disc, std::span<const double> q_row,
                         const NetworkSample& net) {
  const std::size_t k = alpha.size();
  if (beta_diff.size() != k || q_row.size() != k) {
    throw UsageError("neuralcdm_predict: concept dimensions differ");
  }
  if (net.weights.size() != 3 || net.biases.size() != 3) {
    throw UsageError("neuralcdm_predict: network needs three layers");
  }
  Eigen::VectorXd x(static_cast<grad::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    x(static_cast<grad::Index>(i)) = q_row[i] * (alpha[i] - beta_diff[i]) * beta_disc;
  }
  Eigen::VectorXd h = x;
  for (std::size_t layer = 0; layer < 3; ++layer) {
    const Eigen::VectorXd z = net.weights[layer] * h + net.biases[layer];
    h = z.unaryExpr(&grad::stable_sigmoid);
  }
  return h(0);
}

double log_likelihood(double p, int r) {
  return r == 1 ? std::log(p) : std::log1p(-p);
}

double log_likelihood_logit(double logit, int r) {
  return r == 1 ? grad::stable_log_sigmoid(logit) : grad::stable_log_sigmoid(-logit);
}

grad::Var log_likelihood_sum(grad::Var logits, const grad::Matrix& labels) {
  grad::Tape& tape = logits.tape();
  const grad::Var r = tape.constant(labels);
  const grad::Var not_r = tape.constant((1.0 - labels.array()).matrix());
  return grad::sum(r * grad::log_sigmoid(logits) + not_r * grad::log_sigmoid(-logits));
}

}  // namespace ucd
