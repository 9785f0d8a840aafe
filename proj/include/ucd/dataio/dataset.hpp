#pragma once

#include "ucd/grad/tape.hpp"
#include "ucd/models/model.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ucd {

using grad::Index;

/// Opaque external ids mapped to dense indices in first-seen order.
class IdMap {
 public:
  Index intern(const std::string& id);
  std::optional<Index> lookup(const std::string& id) const;
  const std::string& id(Index index) const { return ids_.at(static_cast<std::size_t>(index)); }
  Index size() const { return static_cast<Index>(ids_.size()); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, Index> index_;
};

struct Response {
  Index student = 0;
  Index question = 0;
  int correct = 0;
};

struct ResponseDataset {
  IdMap students;
  IdMap questions;
  std::vector<std::string> concepts;
  std::vector<Response> responses;
  /// N x K, entries 0/1, every row has at least one 1.
  grad::Matrix q_matrix;
  /// Non-fatal issues found while loading (duplicates, tiny students).
  std::vector<std::string> warnings;

  Index num_students() const { return students.size(); }
  Index num_questions() const { return questions.size(); }
  Index num_concepts() const { return q_matrix.cols(); }
  DatasetShape shape() const { return {num_students(), num_questions(), num_concepts()}; }

  /// Throws DataError when an invariant does not hold.
  void validate() const;
};

/// Headered CSV `student_id,question_id,correct` plus an optional Q-matrix CSV
/// `question_id,<concept>...`. Without a Q-matrix every question gets a single
/// shared concept. Duplicate (student, question) pairs keep the first row.
ResponseDataset load_dataset(const std::filesystem::path& responses_path,
                             const std::optional<std::filesystem::path>& qmatrix_path);

/// Re-expresses a dataset in another index space (e.g. the one stored in a
/// trained model). Throws DataError listing ids the maps do not contain.
ResponseDataset reindex(const ResponseDataset& data, const IdMap& students, const IdMap& questions);

void write_responses_csv(const ResponseDataset& data, const std::filesystem::path& path);
void write_qmatrix_csv(const ResponseDataset& data, const std::filesystem::path& path);

struct SplitRatios {
  double train = 0.7;
  double validation = 0.1;
  double test = 0.2;
};

/// Indices into ResponseDataset::responses.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Per-student random partition; students with fewer than 3 responses go
/// entirely to train (with a warning appended to `warnings` when given).
Split split_dataset(const ResponseDataset& data, const SplitRatios& ratios, std::uint64_t seed,
                    std::vector<std::string>* warnings = nullptr);

/// Related-response counts over a subset of responses (normally train).
struct ResponseCounts {
  Eigen::VectorXd student;          // M
  grad::Matrix student_concept;     // M x K
  Eigen::VectorXd question;         // N
};

ResponseCounts count_responses(const ResponseDataset& data, std::span<const std::size_t> subset);

/// Fills the tau matrices of every decomposed block: students use per-student
/// counts (per-concept counts for concept-level models), questions use
/// per-question counts.
void assign_tau(Posterior& posterior, ModelKind kind, const ResponseCounts& counts);

struct SynthOptions {
  Index students = 200;
  Index questions = 30;
  Index concepts = 4;
  ModelConfig model;
  std::uint64_t seed = 0;
  /// Fraction of students that only answer `sparse_questions` questions.
  double sparse_fraction = 0.0;
  Index sparse_questions = 6;
  /// Ground-truth blocks to use instead of prior draws (must match the
  /// manifest shapes).
  std::map<std::string, grad::Matrix> fixed_truth;
};

struct SyntheticData {
  ResponseDataset dataset;
  /// Ground-truth values keyed by variable name, in posterior block layout.
  std::map<std::string, grad::Matrix> truth;
};

/// Draws true parameters from the priors, then r ~ Bernoulli(p) through the
/// chosen interaction function.
SyntheticData synthesize(const SynthOptions& options);

}  // namespace ucd
