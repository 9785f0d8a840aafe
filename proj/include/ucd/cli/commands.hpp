#pragma once

#include "ucd/cli/artifact.hpp"
#include "ucd/eval/metrics.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ucd::cli {

enum ExitCode { kOk = 0, kUsage = 2, kDataError = 3, kNumericError = 4 };

/// Entry point of the `ucd` tool; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Raises glibc's mmap and trim thresholds; a no-op elsewhere.
void tune_allocator();

/// Relative paths resolve against $UCD_DATA_DIR when it is set.
std::filesystem::path resolve_data_path(const std::filesystem::path& path);

/// The 16 (zeta0, zeta1) pairs searched by `ucd grid`.
std::vector<std::pair<double, double>> zeta_grid();
/// Seed of grid run `index`, derived from the base seed.
std::uint64_t grid_seed(std::uint64_t base, std::size_t index);

enum class EvalSubset { Test, Validation, Train, All };
EvalSubset parse_eval_subset(const std::string& name);

struct EvalReport {
  std::size_t responses = 0;
  std::optional<double> auc;
  double acc = 0.0;
  IntervalScores intervals;
  UncertaintyAnalysis uncertainty;
};

/// Point, interval and uncertainty metrics of an artifact on `data`, which
/// must already be in the artifact's index space. Uncertainty correlations
/// use the training split; the others use `subset`. Point predictions use
/// g(mu) unless `mc_eval`, which averages `draws` posterior samples.
EvalReport evaluate(const Artifact& artifact, const ResponseDataset& data, EvalSubset subset,
                    int draws, std::uint64_t seed, bool mc_eval = false);

/// `metric,value,note` rows; undefined values are written as NA.
void write_eval_report(const EvalReport& report, std::ostream& out);

struct ReportRow {
  std::string student;
  std::string dimension;
  double value = 0.0;  // g(mu)
  ConfidenceInterval interval;
  double sigma_model = 0.0;
  double sigma_data = 0.0;
  double sigma = 0.0;
  double tau = 0.0;
};

struct DensityPoint {
  std::string student;
  std::string dimension;
  bool spike = false;  // sigma = 0: a point mass at x
  double x = 0.0;
  double density = 0.0;
};

inline constexpr int kDensityPoints = 200;

/// Per-student posterior summaries of the proficiency block. Throws
/// DataError for ids the artifact does not contain.
std::vector<ReportRow> posterior_report(const Artifact& artifact,
                                        const std::vector<std::string>& student_ids);
/// kDensityPoints points per row, evenly spaced in the unconstrained space
/// over mu -/+ 4 sigma, or a single spike record when sigma = 0.
std::vector<DensityPoint> density_curves(const Artifact& artifact,
                                         const std::vector<std::string>& student_ids);

}  // namespace ucd::cli
