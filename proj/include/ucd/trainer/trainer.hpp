#pragma once

#include "ucd/dataio/dataset.hpp"
#include "ucd/models/model.hpp"
#include "ucd/models/predict.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ucd {

enum class PiSchedule { Geometric, Uniform };

std::string pi_schedule_name(PiSchedule s);
PiSchedule parse_pi_schedule(const std::string& name);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  int mc_samples = 5;
  double zeta0 = 1.0;
  double zeta1 = 1.0;
  double learning_rate = 0.002;
  int batch_size = 256;
  int max_epochs = 100;
  int patience = 10;
  std::uint64_t seed = 0;
  PiSchedule pi_schedule = PiSchedule::Uniform;
  /// Evaluate the KL of every diagnostic variable in each batch instead of
  /// the count-scaled batch-local estimate.
  bool kl_exact = false;
  AdamConfig adam;

  /// Throws ConfigError on invalid values.
  void validate() const;
};

/// KL weights pi_1..pi_M for M batches. Geometric: 2^(M-i) / (2^M - 1);
/// Uniform: 1/M. The last weight absorbs rounding so the sum is exactly 1.
std::vector<double> batch_weights(std::size_t num_batches, PiSchedule schedule);

/// Gradient of the objective, shaped like the posterior.
struct PosteriorGradient {
  std::vector<grad::Matrix> mu;
  std::vector<grad::Matrix> eta;
  std::vector<std::array<double, 2>> lambda_raw;
};

struct ObjectiveSettings {
  int mc_samples = 5;
  double zeta0 = 1.0;
  double zeta1 = 1.0;
  /// pi_i of this batch.
  double pi = 1.0;
  /// M_b, the number of batches per epoch.
  std::size_t num_batches = 1;
  bool kl_exact = false;
  /// Training responses touching each student / question. A diagnostic
  /// variable's KL enters a batch once per response, divided by its count, so
  /// one epoch accumulates each KL term once. Empty vectors mean count 1.
  Eigen::VectorXd student_counts;
  Eigen::VectorXd question_counts;
};

struct ObjectiveValue {
  double loss = 0.0;            // F_i
  double log_likelihood = 0.0;  // L_B
  double kl_diagnostic = 0.0;   // KL over Phi as entered into this batch (unweighted)
  double kl_function = 0.0;     // KL over Omega (unweighted)
  std::optional<PosteriorGradient> gradient;
};

/// F_i = pi_i (zeta0 KL_Phi + zeta1 KL_Omega) - (1/M_c) sum_m sum_j log p(r_j | Psi_jm).
/// Noise is consumed in a fixed order: MC sample, then block order.
ObjectiveValue batch_objective(const DiagnosisModel& model, const Posterior& post,
                               const ResponseBatch& batch, const ObjectiveSettings& settings,
                               NoiseSource& noise, bool with_gradient);

class AdamOptimizer {
 public:
  AdamOptimizer(const Posterior& shape, double learning_rate, AdamConfig config = {});
  void step(Posterior& post, const PosteriorGradient& g);
  long steps() const { return t_; }

 private:
  double lr_;
  AdamConfig cfg_;
  long t_ = 0;
  PosteriorGradient m_;
  PosteriorGradient v_;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_auc = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  Posterior posterior;  // snapshot at the best validation epoch
  int best_epoch = 0;
  double best_val_auc = 0.0;
  double best_val_acc = 0.0;
  std::vector<EpochLog> log;
  double seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Mini-batch variational training with validation-based model selection.
/// Per epoch the training split is shuffled and partitioned; each batch
/// draws M_c samples, forms F_i and takes one Adam step on every mu, eta and
/// lambda. Stops after `patience` epochs without a better validation AUC.
TrainResult train(const DiagnosisModel& model, const ResponseDataset& data, const Split& split,
                  const TrainConfig& config, const InitOptions& init = {},
                  const EpochCallback& on_epoch = {});

void write_epoch_log(const std::vector<EpochLog>& log, const std::filesystem::path& path);

}  // namespace ucd
