#pragma once

#include "ucd/dataio/dataset.hpp"
#include "ucd/models/model.hpp"
#include "ucd/models/predict.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ucd {

// ---- point prediction ----------------------------------------------------

/// Mann-Whitney AUC with half credit for ties. Throws UndefinedStatistic when
/// the labels contain a single class.
double auc(std::span<const double> predictions, std::span<const int> labels);
/// Accuracy at threshold 0.5 (p >= 0.5 predicts a correct response).
double accuracy(std::span<const double> predictions, std::span<const int> labels);

struct PointScores {
  std::optional<double> auc;  // empty when the labels have a single class
  double acc = 0.0;
};
PointScores auc_acc(std::span<const double> predictions, std::span<const int> labels);

// ---- intervals -----------------------------------------------------------

struct PredictionInterval {
  double lower = 0.0;
  double upper = 0.0;
  Index student = 0;
  Index question = 0;
};

/// Projects each response's 95% proficiency interval to a prediction interval.
/// The student's bounds g(mu -/+ 1.96 sigma) are fixed while question and
/// network variables are drawn `draws` times; the endpoints are the averaged
/// predictions. Relies on the model being non-decreasing in proficiency.
std::vector<PredictionInterval> project_intervals(const DiagnosisModel& model,
                                                  const Posterior& post,
                                                  const ResponseBatch& batch, int draws,
                                                  NoiseSource& noise);

struct IntervalScores {
  double picp = 0.0;
  double piaw = 0.0;
};

/// PICP counts a response as covered when the label interval ([0, 0.5] for
/// r = 0, [0.5, 1] for r = 1) meets [lower, upper]; PIAW is the mean width.
IntervalScores picp_piaw(std::span<const PredictionInterval> intervals, std::span<const int> labels);

// ---- uncertainty analysis -----------------------------------------------

/// Fractional ranks (ties share their average rank), 1-based.
std::vector<double> average_ranks(std::span<const double> xs);
/// Pearson correlation of average ranks. Throws UndefinedStatistic for
/// constant inputs or fewer than two points.
double spearman(std::span<const double> xs, std::span<const double> ys);
double pearson(std::span<const double> xs, std::span<const double> ys);

enum class DistanceMode { Latent, Concept };

/// Sum of |p_hat - r| per student (Latent, length M) or per (student, concept)
/// over responses whose question requires the concept (Concept, M x K,
/// row-major by student).
struct FittingDistances {
  DistanceMode mode = DistanceMode::Latent;
  grad::Matrix values;  // M x 1 or M x K
};

FittingDistances fitting_distance(const ResponseDataset& data, std::span<const std::size_t> subset,
                                  std::span<const double> expected_predictions, DistanceMode mode);

struct Correlation {
  std::optional<double> value;  // empty when not computable
  std::string note;
};

struct UncertaintyAnalysis {
  std::vector<double> sigma;          // effective sigma per target
  std::vector<double> model_sigma;    // sigma_m per target
  std::vector<double> counts;         // related-response counts per target
  std::vector<double> distances;      // fitting distance per target
  Correlation sigma_vs_count;         // expected negative
  Correlation model_sigma_vs_distance;
};

/// Targets are students (latent models) or (student, concept) pairs
/// (concept-level models). Counts and distances are taken over `subset`
/// (the training responses); `draws` posterior samples give p_hat.
UncertaintyAnalysis uncertainty_correlations(const DiagnosisModel& model, const Posterior& post,
                                             const ResponseDataset& data,
                                             std::span<const std::size_t> subset, int draws,
                                             NoiseSource& noise);

}  // namespace ucd
