#include "ucd/models/predict.hpp"

#include "ucd/dataio/dataset.hpp"
#include "ucd/errors.hpp"

namespace ucd {

void GaussianNoise::fill(grad::Matrix& eps) {
  for (grad::Index i = 0; i < eps.size(); ++i) eps.data()[i] = normal_(engine_);
}

ResponseBatch make_batch(const ResponseDataset& data, std::span<const std::size_t> response_indices) {
  ResponseBatch b;
  const auto n = static_cast<grad::Index>(response_indices.size());
  b.students.reserve(response_indices.size());
  b.questions.reserve(response_indices.size());
  b.labels.resize(1, n);
  b.q_columns.resize(data.num_concepts(), n);
  for (grad::Index k = 0; k < n; ++k) {
    const Response& r = data.responses.at(response_indices[static_cast<std::size_t>(k)]);
    b.students.push_back(r.student);
    b.questions.push_back(r.question);
    b.labels(0, k) = r.correct;
    b.q_columns.col(k) = data.q_matrix.row(r.question).transpose();
  }
  return b;
}

grad::Matrix gather_columns(const grad::Matrix& table, std::span<const grad::Index> cols) {
  grad::Matrix out(table.rows(), static_cast<grad::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<grad::Index>(k)) = table.col(cols[k]);
  return out;
}

Eigen::RowVectorXd interaction_probabilities(const DiagnosisModel& model,
                                             const VariableValues& values,
                                             const grad::Matrix& q_columns) {
  grad::Tape tape;
  SampledVariables vars;
  for (const auto& [name, value] : values) vars.emplace(name, tape.constant(value));
  const grad::Var logits = model.logits(tape, vars, q_columns);
  return logits.value().row(0).unaryExpr(&grad::stable_sigmoid);
}

namespace {

std::span<const grad::Index> entity_indices(const VariableBlock& b, const ResponseBatch& batch) {
  return b.role == VariableRole::Student ? std::span<const grad::Index>(batch.students)
                                         : std::span<const grad::Index>(batch.questions);
}

}  // namespace

VariableValues posterior_center_values(const Posterior& post, const ResponseBatch& batch) {
  VariableValues values;
  for (const auto& b : post.blocks) {
    if (b.role == VariableRole::Function) {
      values[b.name] = b.transform.to_domain(b.mu);
    } else {
      values[b.name] = b.transform.to_domain(gather_columns(b.mu, entity_indices(b, batch)));
    }
  }
  return values;
}

VariableValues posterior_draw_values(const Posterior& post, const ResponseBatch& batch,
                                     NoiseSource& noise) {
  VariableValues values;
  for (const auto& b : post.blocks) {
    const grad::Matrix sigma = post.effective_sigma(b);
    grad::Matrix mu = b.mu;
    grad::Matrix s = sigma;
    if (b.role != VariableRole::Function) {
      mu = gather_columns(b.mu, entity_indices(b, batch));
      s = gather_columns(sigma, entity_indices(b, batch));
    }
    grad::Matrix eps(mu.rows(), mu.cols());
    noise.fill(eps);
    values[b.name] = b.transform.to_domain((mu + s.cwiseProduct(eps)).eval());
  }
  return values;
}

Eigen::RowVectorXd predict_center(const DiagnosisModel& model, const Posterior& post,
                                  const ResponseBatch& batch) {
  return interaction_probabilities(model, posterior_center_values(post, batch), batch.q_columns);
}

Eigen::RowVectorXd predict_expected(const DiagnosisModel& model, const Posterior& post,
                                    const ResponseBatch& batch, int draws, NoiseSource& noise) {
  if (draws < 1) throw ConfigError("number of posterior draws must be >= 1");
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(batch.size());
  for (int d = 0; d < draws; ++d) {
    mean += interaction_probabilities(model, posterior_draw_values(post, batch, noise), batch.q_columns);
  }
  return mean / static_cast<double>(draws);
}

}  // namespace ucd
