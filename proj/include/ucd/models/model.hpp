#pragma once

#include "ucd/grad/tape.hpp"
#include "ucd/varparam/variational.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ucd {

enum class ModelKind { Irt, Mirt, NeuralCdm };

std::string model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct ModelConfig {
  ModelKind kind = ModelKind::Irt;
  /// Latent trait dimension for MIRT.
  int latent_dim = 16;
  /// Hidden layer widths for NeuralCDM.
  std::vector<int> hidden = {512, 256};
};

struct DatasetShape {
  grad::Index students = 0;
  grad::Index questions = 0;
  grad::Index concepts = 0;
};

/// Declares one variable block the interaction function consumes.
struct VariableSpec {
  std::string name;
  VariableRole role = VariableRole::Function;
  DomainTransform transform;
  grad::Index rows = 1;
  /// Entity count for student/question roles, matrix columns otherwise.
  grad::Index cols = 1;
};

/// Sampled values fed to an interaction function on a tape. Student and
/// question blocks are gathered per response (rows x batch); function blocks
/// keep their own shape.
using SampledVariables = std::map<std::string, grad::Var>;

/// Interaction function F(alpha, beta, Omega) -> logit of p(r = 1).
class DiagnosisModel {
 public:
  virtual ~DiagnosisModel() = default;

  virtual ModelKind kind() const = 0;
  virtual std::vector<VariableSpec> manifest(const DatasetShape& shape) const = 0;
  /// Logits for a batch of responses as a 1 x B node. `q_columns` holds the
  /// Q-matrix row of each response's question as a K x B matrix.
  virtual grad::Var logits(grad::Tape& tape, const SampledVariables& vars,
                           const grad::Matrix& q_columns) const = 0;

  const ModelConfig& config() const { return config_; }

 protected:
  explicit DiagnosisModel(ModelConfig config) : config_(std::move(config)) {}
  ModelConfig config_;
};

std::unique_ptr<DiagnosisModel> make_model(const ModelConfig& config);

/// Initial variational parameters: diagnostic means ~ N(0, 0.1^2) with
/// softplus(eta) = 0.5; network weights from Kaiming-normal W with mu = ln|W|,
/// biases mu = 0, softplus(eta) = 0.1. Lambdas start at (1, 0.01).
/// With center_hidden_biases, the bias of every positive-weight layer after
/// the first starts at -0.5 * (row sum of e^mu_W).
struct InitOptions {
  double diagnostic_mu_std = 0.1;
  double diagnostic_sigma = 0.5;
  double function_sigma = 0.1;
  double lambda0 = 1.0;
  double lambda1 = 0.01;
  bool shared_lambdas = false;
  bool center_hidden_biases = true;
};

Posterior initialize_posterior(const DiagnosisModel& model, const DatasetShape& shape,
                               const InitOptions& options, std::mt19937_64& rng);

// Plain-value interaction functions.

/// 1 / (1 + exp(-1.7 disc (alpha - diff))).
double irt_predict(double alpha, double beta_diff, double beta_disc);
/// sigmoid(a . alpha + d); throws UsageError on a dimension mismatch.
double mirt_predict(std::span<const double> alpha, std::span<const double> a, double d);

/// A sampled NeuralCDM network: positive weights W1..W3 and biases b1..b3.
struct NetworkSample {
  std::vector<grad::Matrix> weights;
  std::vector<Eigen::VectorXd> biases;
};

double neuralcdm_predict(std::span<const double> alpha, std::span<const double> beta_diff,
                         double beta_disc, std::span<const double> q_row,
                         const NetworkSample& net);

/// r ln p + (1 - r) ln(1 - p).
double log_likelihood(double p, int r);
/// Same quantity from the logit, without forming p.
double log_likelihood_logit(double logit, int r);
/// Graph version over a 1 x B logit row and 0/1 labels; returns the sum.
grad::Var log_likelihood_sum(grad::Var logits, const grad::Matrix& labels);

}  // namespace ucd
