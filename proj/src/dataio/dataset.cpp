#include "ucd/dataio/dataset.hpp"

#include "ucd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ucd {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

int parse_binary(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  throw DataError(where(path, line) + ": expected 0 or 1, got '" + field + "'");
}

}  // namespace

Index IdMap::intern(const std::string& id) {
  auto [it, inserted] = index_.try_emplace(id, static_cast<Index>(ids_.size()));
  if (inserted) ids_.push_back(id);
  return it->second;
}

std::optional<Index> IdMap::lookup(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void ResponseDataset::validate() const {
  if (q_matrix.rows() != num_questions()) {
    throw DataError("Q-matrix has " + std::to_string(q_matrix.rows()) + " rows but there are " +
                    std::to_string(num_questions()) + " questions");
  }
  for (Index j = 0; j < q_matrix.rows(); ++j) {
    if (q_matrix.row(j).sum() < 1.0) {
      throw DataError("Q-matrix row for question '" + questions.id(j) + "' has no concept");
    }
  }
  for (const auto& r : responses) {
    if (r.student < 0 || r.student >= num_students() || r.question < 0 ||
        r.question >= num_questions()) {
      throw DataError("response references an unknown student or question index");
    }
    if (r.correct != 0 && r.correct != 1) throw DataError("response label must be 0 or 1");
  }
}

ResponseDataset load_dataset(const std::filesystem::path& responses_path,
                             const std::optional<std::filesystem::path>& qmatrix_path) {
  ResponseDataset data;
  std::vector<std::vector<double>> q_rows;

  if (qmatrix_path) {
    auto in = open_input(*qmatrix_path);
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto fields = split_fields(line);
      if (width == 0) {
        if (fields.size() < 2) {
          throw DataError(where(*qmatrix_path, line_no) +
                          ": Q-matrix header needs question_id and at least one concept");
        }
        width = fields.size();
        data.concepts.assign(fields.begin() + 1, fields.end());
        continue;
      }
      if (fields.size() != width) {
        throw DataError(where(*qmatrix_path, line_no) + ": expected " + std::to_string(width) +
                        " fields, got " + std::to_string(fields.size()));
      }
      if (data.questions.lookup(fields[0])) {
        throw DataError(where(*qmatrix_path, line_no) + ": duplicate question '" + fields[0] + "'");
      }
      std::vector<double> row;
      for (std::size_t k = 1; k < fields.size(); ++k) {
        row.push_back(parse_binary(fields[k], *qmatrix_path, line_no));
      }
      if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; })) {
        throw DataError(where(*qmatrix_path, line_no) + ": question '" + fields[0] +
                        "' has an all-zero Q-matrix row");
      }
      data.questions.intern(fields[0]);
      q_rows.push_back(std::move(row));
    }
    if (width == 0) throw DataError(qmatrix_path->string() + ": empty Q-matrix file");
  }

  auto in = open_input(responses_path);
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  std::set<std::pair<Index, Index>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (header) {
      header = false;
      if (fields.size() != 3) {
        throw DataError(where(responses_path, line_no) +
                        ": expected header student_id,question_id,correct");
      }
      continue;
    }
    if (fields.size() != 3) {
      throw DataError(where(responses_path, line_no) + ": expected 3 fields, got " +
                      std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw DataError(where(responses_path, line_no) + ": empty id");
    }
    const int correct = parse_binary(fields[2], responses_path, line_no);
    Index question = 0;
    if (qmatrix_path) {
      auto q = data.questions.lookup(fields[1]);
      if (!q) {
        throw DataError(where(responses_path, line_no) + ": question '" + fields[1] +
                        "' is not in the Q-matrix");
      }
      question = *q;
    } else {
      question = data.questions.intern(fields[1]);
    }
    const Index student = data.students.intern(fields[0]);
    if (!seen.emplace(student, question).second) {
      data.warnings.push_back(where(responses_path, line_no) + ": duplicate response of '" +
                              fields[0] + "' to '" + fields[1] + "', keeping the first");
      continue;
    }
    data.responses.push_back({student, question, correct});
  }
  if (header) throw DataError(responses_path.string() + ": empty responses file");

  if (qmatrix_path) {
    data.q_matrix.resize(data.num_questions(), static_cast<Index>(data.concepts.size()));
    for (Index j = 0; j < data.q_matrix.rows(); ++j) {
      for (Index k = 0; k < data.q_matrix.cols(); ++k) {
        data.q_matrix(j, k) = q_rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
      }
    }
  } else {
    data.concepts = {"c1"};
    data.q_matrix = grad::Matrix::Ones(data.num_questions(), 1);
  }
  data.validate();
  return data;
}

ResponseDataset reindex(const ResponseDataset& data, const IdMap& students, const IdMap& questions) {
  std::vector<std::string> missing;
  for (const auto& id : data.students.ids()) {
    if (!students.lookup(id)) missing.push_back("student '" + id + "'");
  }
  for (const auto& id : data.questions.ids()) {
    if (!questions.lookup(id)) missing.push_back("question '" + id + "'");
  }
  if (!missing.empty()) {
    std::string msg = "data does not match the model index maps; unknown ids:";
    const std::size_t shown = std::min<std::size_t>(missing.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) msg += " " + missing[i];
    if (missing.size() > shown) msg += " ... (" + std::to_string(missing.size()) + " total)";
    throw DataError(msg);
  }
  ResponseDataset out;
  out.students = students;
  out.questions = questions;
  out.concepts = data.concepts;
  out.warnings = data.warnings;
  out.q_matrix = grad::Matrix::Zero(questions.size(), data.num_concepts());
  // Questions absent from the data keep a placeholder row so validate() holds.
  out.q_matrix.col(0).setOnes();
  for (Index j = 0; j < data.num_questions(); ++j) {
    out.q_matrix.row(*questions.lookup(data.questions.id(j))) = data.q_matrix.row(j);
  }
  out.responses.reserve(data.responses.size());
  for (const auto& r : data.responses) {
    out.responses.push_back({*students.lookup(data.students.id(r.student)),
                             *questions.lookup(data.questions.id(r.question)), r.correct});
  }
  return out;
}

void write_responses_csv(const ResponseDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "student_id,question_id,correct\n";
  for (const auto& r : data.responses) {
    out << data.students.id(r.student) << ',' << data.questions.id(r.question) << ','
        << r.correct << '\n';
  }
}

void write_qmatrix_csv(const ResponseDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "question_id";
  for (const auto& c : data.concepts) out << ',' << c;
  out << '\n';
  for (Index j = 0; j < data.num_questions(); ++j) {
    out << data.questions.id(j);
    for (Index k = 0; k < data.num_concepts(); ++k) out << ',' << static_cast<int>(data.q_matrix(j, k));
    out << '\n';
  }
}

Split split_dataset(const ResponseDataset& data, const SplitRatios& ratios, std::uint64_t seed,
                    std::vector<std::string>* warnings) {
  const double total = ratios.train + ratios.validation + ratios.test;
  if (std::abs(total - 1.0) > 1e-9 || ratios.train < 0 || ratios.validation < 0 || ratios.test < 0) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  std::vector<std::vector<std::size_t>> by_student(static_cast<std::size_t>(data.num_students()));
  for (std::size_t i = 0; i < data.responses.size(); ++i) {
    by_student[static_cast<std::size_t>(data.responses[i].student)].push_back(i);
  }
  std::mt19937_64 rng(seed);
  Split split;
  for (std::size_t s = 0; s < by_student.size(); ++s) {
    auto& idx = by_student[s];
    if (idx.empty()) continue;
    if (idx.size() < 3) {
      if (warnings) {
        warnings->push_back("student '" + data.students.id(static_cast<Index>(s)) + "' has " +
                            std::to_string(idx.size()) +
                            " responses; all assigned to the training split");
      }
      split.train.insert(split.train.end(), idx.begin(), idx.end());
      continue;
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    const double n = static_cast<double>(idx.size());
    auto n_train = static_cast<std::size_t>(std::llround(ratios.train * n));
    auto n_val = static_cast<std::size_t>(std::llround(ratios.validation * n));
    n_train = std::min(n_train, idx.size());
    n_val = std::min(n_val, idx.size() - n_train);
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<long>(n_train));
    split.validation.insert(split.validation.end(), idx.begin() + static_cast<long>(n_train),
                            idx.begin() + static_cast<long>(n_train + n_val));
    split.test.insert(split.test.end(), idx.begin() + static_cast<long>(n_train + n_val), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

ResponseCounts count_responses(const ResponseDataset& data, std::span<const std::size_t> subset) {
  ResponseCounts c;
  c.student = Eigen::VectorXd::Zero(data.num_students());
  c.student_concept = grad::Matrix::Zero(data.num_students(), data.num_concepts());
  c.question = Eigen::VectorXd::Zero(data.num_questions());
  for (const std::size_t i : subset) {
    const Response& r = data.responses.at(i);
    c.student(r.student) += 1.0;
    c.question(r.question) += 1.0;
    c.student_concept.row(r.student) += data.q_matrix.row(r.question);
  }
  return c;
}

void assign_tau(Posterior& posterior, ModelKind kind, const ResponseCounts& counts) {
  for (auto& b : posterior.blocks) {
    if (!b.decomposed()) continue;
    b.tau.resize(b.rows(), b.cols());
    if (b.role == VariableRole::Student) {
      if (kind == ModelKind::NeuralCdm) {
        b.tau = counts.student_concept.transpose();
      } else {
        b.tau.rowwise() = counts.student.transpose();
      }
    } else {
      b.tau.rowwise() = counts.question.transpose();
    }
  }
}

}  // namespace ucd
