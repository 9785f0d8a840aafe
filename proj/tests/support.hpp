#pragma once

#include "ucd/dataio/dataset.hpp"

#include <filesystem>
#include <string>
#include <tuple>
#include <vector>

namespace ucd::testing {

/// In-memory dataset from (student, question, correct) triples; the Q-matrix
/// defaults to a single concept.
inline ResponseDataset make_dataset(const std::vector<std::tuple<std::string, std::string, int>>& rows,
                                    grad::Matrix q = {}) {
  ResponseDataset d;
  for (const auto& [s, j, r] : rows) d.responses.push_back({d.students.intern(s), d.questions.intern(j), r});
  if (q.size() == 0) q = grad::Matrix::Ones(d.num_questions(), 1);
  d.q_matrix = q;
  for (grad::Index k = 0; k < q.cols(); ++k) d.concepts.push_back("k" + std::to_string(k));
  d.validate();
  return d;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ucd_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ucd::testing
