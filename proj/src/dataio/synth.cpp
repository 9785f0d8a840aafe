#include "ucd/dataio/dataset.hpp"

#include "ucd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace ucd {

namespace {

std::string padded(char prefix, Index i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%0*ld", prefix, width, static_cast<long>(i));
  return buf;
}

int digits(Index n) { return static_cast<int>(std::to_string(std::max<Index>(n, 1)).size()); }

grad::Matrix draw(const DomainTransform& t, Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  grad::Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = t.to_domain(normal(rng));
  return m;
}

}  // namespace

SyntheticData synthesize(const SynthOptions& o) {
  if (o.students < 1 || o.questions < 1 || o.concepts < 1) {
    throw ConfigError("synthesize needs at least one student, question and concept");
  }
  if (o.sparse_fraction < 0.0 || o.sparse_fraction > 1.0) {
    throw ConfigError("sparse_fraction must lie in [0, 1]");
  }
  std::mt19937_64 rng(o.seed);
  SyntheticData out;
  ResponseDataset& data = out.dataset;

  for (Index i = 0; i < o.students; ++i) data.students.intern(padded('s', i + 1, digits(o.students)));
  for (Index j = 0; j < o.questions; ++j) data.questions.intern(padded('q', j + 1, digits(o.questions)));
  for (Index k = 0; k < o.concepts; ++k) data.concepts.push_back("c" + std::to_string(k + 1));

  // Each question tests 1..3 distinct concepts.
  data.q_matrix = grad::Matrix::Zero(o.questions, o.concepts);
  std::vector<Index> concept_order(static_cast<std::size_t>(o.concepts));
  std::iota(concept_order.begin(), concept_order.end(), Index{0});
  const Index max_concepts = std::min<Index>(3, o.concepts);
  for (Index j = 0; j < o.questions; ++j) {
    std::uniform_int_distribution<Index> count(1, max_concepts);
    const Index n = count(rng);
    std::shuffle(concept_order.begin(), concept_order.end(), rng);
    for (Index k = 0; k < n; ++k) data.q_matrix(j, concept_order[static_cast<std::size_t>(k)]) = 1.0;
  }

  const auto model = make_model(o.model);
  const DatasetShape shape = data.shape();
  for (const auto& spec : model->manifest(shape)) {
    out.truth[spec.name] = draw(spec.transform, spec.rows, spec.cols, rng);
    if (const auto it = o.fixed_truth.find(spec.name); it != o.fixed_truth.end()) {
      if (it->second.rows() != spec.rows || it->second.cols() != spec.cols) {
        throw ConfigError("fixed truth for '" + spec.name + "' has the wrong shape");
      }
      out.truth[spec.name] = it->second;
    }
  }
  NetworkSample net;
  if (o.model.kind == ModelKind::NeuralCdm) {
    // Each unit's positive weights are rescaled and its bias set so that its
    // pre-activation over all student-question pairs has mean 0 and standard
    // deviation kUnitSpread.
    constexpr double kUnitSpread = 2.0;
    const Index pairs = o.students * o.questions;
    grad::Matrix h(o.concepts, pairs);
    for (Index i = 0; i < o.students; ++i) {
      for (Index j = 0; j < o.questions; ++j) {
        h.col(i * o.questions + j) = data.q_matrix.row(j).transpose().cwiseProduct(
                                         out.truth["alpha"].col(i) - out.truth["beta_diff"].col(j)) *
                                     out.truth["beta_disc"](0, j);
      }
    }
    for (int layer = 1; layer <= 3; ++layer) {
      grad::Matrix& w = out.truth["W" + std::to_string(layer)];
      grad::Matrix& b = out.truth["b" + std::to_string(layer)];
      grad::Matrix pre = w * h;
      for (Index u = 0; u < w.rows(); ++u) {
        const double mean = pre.row(u).mean();
        const double sd = std::sqrt((pre.row(u).array() - mean).square().mean());
        const double scale = sd > 0.0 ? kUnitSpread / sd : 1.0;
        w.row(u) *= scale;
        b(u, 0) = -mean * scale;
        pre.row(u) = (pre.row(u).array() - mean) * scale;
      }
      h = pre.unaryExpr(&grad::stable_sigmoid);
      net.weights.push_back(w);
      net.biases.push_back(b.col(0));
    }
  }

  std::vector<Index> question_order(static_cast<std::size_t>(o.questions));
  std::iota(question_order.begin(), question_order.end(), Index{0});
  const auto sparse_students = static_cast<Index>(std::llround(o.sparse_fraction * static_cast<double>(o.students)));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Index i = 0; i < o.students; ++i) {
    std::vector<Index> answered = question_order;
    if (i < sparse_students) {
      std::shuffle(answered.begin(), answered.end(), rng);
      answered.resize(static_cast<std::size_t>(std::clamp<Index>(o.sparse_questions, 1, o.questions)));
      std::sort(answered.begin(), answered.end());
    }
    for (const Index j : answered) {
      double p = 0.5;
      switch (o.model.kind) {
        case ModelKind::Irt:
          p = irt_predict(out.truth["alpha"](0, i), out.truth["beta_diff"](0, j),
                          out.truth["beta_disc"](0, j));
          break;
        case ModelKind::Mirt: {
          const Eigen::VectorXd alpha = out.truth["alpha"].col(i);
          const Eigen::VectorXd a = out.truth["a"].col(j);
          p = mirt_predict(std::span(alpha.data(), static_cast<std::size_t>(alpha.size())),
                           std::span(a.data(), static_cast<std::size_t>(a.size())),
                           out.truth["d"](0, j));
          break;
        }
        case ModelKind::NeuralCdm: {
          const Eigen::VectorXd alpha = out.truth["alpha"].col(i);
          const Eigen::VectorXd diff = out.truth["beta_diff"].col(j);
          const Eigen::VectorXd q = data.q_matrix.row(j).transpose();
          const auto k = static_cast<std::size_t>(alpha.size());
          p = neuralcdm_predict(std::span(alpha.data(), k), std::span(diff.data(), k),
                                out.truth["beta_disc"](0, j), std::span(q.data(), k), net);
          break;
        }
      }
      data.responses.push_back({i, j, unif(rng) < p ? 1 : 0});
    }
  }
  data.validate();
  return out;
}

}  // namespace ucd
