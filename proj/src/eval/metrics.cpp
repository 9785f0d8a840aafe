#include "ucd/eval/metrics.hpp"

#include "ucd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ucd {

namespace {

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw UsageError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

}  // namespace

double auc(std::span<const double> predictions, std::span<const int> labels) {
  check_sizes(predictions.size(), labels.size(), "auc");
  const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double negatives = static_cast<double>(labels.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw UndefinedStatistic("AUC is undefined when all labels belong to one class");
  }
  const auto ranks = average_ranks(predictions);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) rank_sum += ranks[i];
  }
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

double accuracy(std::span<const double> predictions, std::span<const int> labels) {
  check_sizes(predictions.size(), labels.size(), "accuracy");
  if (labels.empty()) throw UndefinedStatistic("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    hits += ((predictions[i] >= 0.5 ? 1 : 0) == labels[i]) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

PointScores auc_acc(std::span<const double> predictions, std::span<const int> labels) {
  PointScores s;
  s.acc = accuracy(predictions, labels);
  try {
    s.auc = auc(predictions, labels);
  } catch (const UndefinedStatistic&) {
    s.auc.reset();
  }
  return s;
}

std::vector<PredictionInterval> project_intervals(const DiagnosisModel& model,
                                                  const Posterior& post,
                                                  const ResponseBatch& batch, int draws,
                                                  NoiseSource& noise) {
  if (draws < 1) throw ConfigError("interval projection needs at least one draw");
  VariableValues lower_alpha;
  VariableValues upper_alpha;
  for (const auto& b : post.blocks) {
    if (b.role != VariableRole::Student) continue;
    const grad::Matrix mu = gather_columns(b.mu, batch.students);
    const grad::Matrix sigma = gather_columns(post.effective_sigma(b), batch.students);
    lower_alpha[b.name] = b.transform.to_domain((mu - kZ95 * sigma).eval());
    upper_alpha[b.name] = b.transform.to_domain((mu + kZ95 * sigma).eval());
  }
  Eigen::RowVectorXd p_low = Eigen::RowVectorXd::Zero(batch.size());
  Eigen::RowVectorXd p_high = Eigen::RowVectorXd::Zero(batch.size());
  for (int d = 0; d < draws; ++d) {
    VariableValues values = posterior_draw_values(post, batch, noise);
    for (const auto& [name, v] : lower_alpha) values[name] = v;
    p_low += interaction_probabilities(model, values, batch.q_columns);
    for (const auto& [name, v] : upper_alpha) values[name] = v;
    p_high += interaction_probabilities(model, values, batch.q_columns);
  }
  p_low /= static_cast<double>(draws);
  p_high /= static_cast<double>(draws);
  std::vector<PredictionInterval> out;
  out.reserve(static_cast<std::size_t>(batch.size()));
  for (grad::Index k = 0; k < batch.size(); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    out.push_back({p_low(k), p_high(k), batch.students[kk], batch.questions[kk]});
  }
  return out;
}

IntervalScores picp_piaw(std::span<const PredictionInterval> intervals, std::span<const int> labels) {
  check_sizes(intervals.size(), labels.size(), "picp_piaw");
  if (intervals.empty()) throw UndefinedStatistic("PICP/PIAW need at least one interval");
  double covered = 0.0;
  double width = 0.0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const double label_lo = 0.5 * labels[i];
    const double label_hi = 0.5 * (1.0 + labels[i]);
    const auto& iv = intervals[i];
    if (iv.lower <= label_hi && label_lo <= iv.upper) covered += 1.0;
    width += iv.upper - iv.lower;
  }
  const auto n = static_cast<double>(intervals.size());
  return {covered / n, width / n};
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  check_sizes(xs.size(), ys.size(), "pearson");
  if (xs.size() < 2) throw UndefinedStatistic("correlation needs at least two points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("correlation of a constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  check_sizes(xs.size(), ys.size(), "spearman");
  if (xs.size() < 2) throw UndefinedStatistic("rank correlation needs at least two points");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

FittingDistances fitting_distance(const ResponseDataset& data, std::span<const std::size_t> subset,
                                  std::span<const double> expected_predictions, DistanceMode mode) {
  check_sizes(subset.size(), expected_predictions.size(), "fitting_distance");
  FittingDistances out;
  out.mode = mode;
  out.values = grad::Matrix::Zero(data.num_students(), mode == DistanceMode::Latent ? 1 : data.num_concepts());
  for (std::size_t k = 0; k < subset.size(); ++k) {
    const Response& r = data.responses.at(subset[k]);
    const double d = std::abs(expected_predictions[k] - r.correct);
    if (mode == DistanceMode::Latent) {
      out.values(r.student, 0) += d;
    } else {
      out.values.row(r.student) += d * data.q_matrix.row(r.question);
    }
  }
  return out;
}

namespace {

Correlation safe_spearman(const std::vector<double>& xs, const std::vector<double>& ys,
                          const char* constant_note) {
  Correlation c;
  if (xs.size() >= 2 && std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) == xs.end()) {
    c.note = constant_note;
    return c;
  }
  try {
    c.value = spearman(xs, ys);
  } catch (const UndefinedStatistic& e) {
    c.note = e.what();
  }
  return c;
}

}  // namespace

UncertaintyAnalysis uncertainty_correlations(const DiagnosisModel& model, const Posterior& post,
                                             const ResponseDataset& data,
                                             std::span<const std::size_t> subset, int draws,
                                             NoiseSource& noise) {
  const VariableBlock* alpha = nullptr;
  for (const auto& b : post.blocks) {
    if (b.role == VariableRole::Student) {
      alpha = &b;
      break;
    }
  }
  if (!alpha) throw UsageError("model has no student variable");
  const bool concept_level = model.kind() == ModelKind::NeuralCdm;

  const ResponseBatch batch = make_batch(data, subset);
  Eigen::RowVectorXd p_hat = Eigen::RowVectorXd::Zero(batch.size());
  if (batch.size() > 0) p_hat = predict_expected(model, post, batch, draws, noise);
  const std::vector<double> p(p_hat.data(), p_hat.data() + p_hat.size());
  const auto dist = fitting_distance(data, subset, p,
                                     concept_level ? DistanceMode::Concept : DistanceMode::Latent);
  const auto counts = count_responses(data, subset);

  const grad::Matrix sigma = post.effective_sigma(*alpha);
  const grad::Matrix sigma_m = post.model_sigma(*alpha);
  UncertaintyAnalysis a;
  for (Index i = 0; i < data.num_students(); ++i) {
    if (concept_level) {
      for (Index k = 0; k < data.num_concepts(); ++k) {
        a.sigma.push_back(sigma(k, i));
        a.model_sigma.push_back(sigma_m(k, i));
        a.counts.push_back(counts.student_concept(i, k));
        a.distances.push_back(dist.values(i, k));
      }
    } else {
      a.sigma.push_back(sigma.col(i).mean());
      a.model_sigma.push_back(sigma_m.col(i).mean());
      a.counts.push_back(counts.student(i));
      a.distances.push_back(dist.values(i, 0));
    }
  }
  a.sigma_vs_count = safe_spearman(a.counts, a.sigma,
                                   "not computable: every target has the same related-response count");
  a.model_sigma_vs_distance = safe_spearman(a.model_sigma, a.distances,
                                            "not computable: model sigma is constant");
  if (!concept_level && !a.sigma_vs_count.value) {
    a.model_sigma_vs_distance = {std::nullopt, a.sigma_vs_count.note};
  }
  return a;
}

}  // namespace ucd
