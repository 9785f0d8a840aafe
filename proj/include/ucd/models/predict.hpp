#pragma once

#include "ucd/models/model.hpp"

#include <map>
#include <random>
#include <span>
#include <string>

namespace ucd {

struct ResponseDataset;

/// Source of standard-normal noise for reparameterized sampling.
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  virtual void fill(grad::Matrix& eps) = 0;
};

/// Seeded N(0, 1) stream. Copies replay the same sequence.
class GaussianNoise final : public NoiseSource {
 public:
  explicit GaussianNoise(std::uint64_t seed) : engine_(seed) {}
  void fill(grad::Matrix& eps) override;
  double next() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// eps = 0 everywhere: every sample sits at g(mu).
class ZeroNoise final : public NoiseSource {
 public:
  void fill(grad::Matrix& eps) override { eps.setZero(); }
};

/// Student and question ids of a set of responses with their Q-matrix rows.
struct ResponseBatch {
  std::vector<grad::Index> students;
  std::vector<grad::Index> questions;
  grad::Matrix labels;     // 1 x B
  grad::Matrix q_columns;  // K x B

  grad::Index size() const { return static_cast<grad::Index>(students.size()); }
};

ResponseBatch make_batch(const ResponseDataset& data, std::span<const std::size_t> response_indices);

/// Domain values of every variable for one forward evaluation: gathered
/// per response for student/question blocks, full shape for function blocks.
using VariableValues = std::map<std::string, grad::Matrix>;

/// sigmoid(logits) for a batch with fixed variable values.
Eigen::RowVectorXd interaction_probabilities(const DiagnosisModel& model,
                                             const VariableValues& values,
                                             const grad::Matrix& q_columns);

grad::Matrix gather_columns(const grad::Matrix& table, std::span<const grad::Index> cols);

/// Values at g(mu) for every block.
VariableValues posterior_center_values(const Posterior& post, const ResponseBatch& batch);

/// One reparameterized draw g(mu + sigma eps) of every block, with an
/// independent draw per response for student/question blocks.
VariableValues posterior_draw_values(const Posterior& post, const ResponseBatch& batch,
                                     NoiseSource& noise);

/// Point predictions from posterior centres g(mu).
Eigen::RowVectorXd predict_center(const DiagnosisModel& model, const Posterior& post,
                                  const ResponseBatch& batch);

/// Expected predictions: mean over `draws` posterior samples.
Eigen::RowVectorXd predict_expected(const DiagnosisModel& model, const Posterior& post,
                                    const ResponseBatch& batch, int draws, NoiseSource& noise);

}  // namespace ucd
