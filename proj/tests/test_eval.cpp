#include "oracles.hpp"
#include "support.hpp"

#include "ucd/errors.hpp"
#include "ucd/eval/metrics.hpp"
#include "ucd/trainer/trainer.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace ucd;
using Catch::Approx;
using ucd::testing::make_dataset;
using namespace ucd::testing;

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("AUC and accuracy") {
  const std::vector<double> p = {0.9, 0.1};
  const std::vector<int> y = {1, 0};
  CHECK(auc(p, y) == 1.0);
  CHECK(accuracy(p, y) == 1.0);
  const std::vector<double> flat(6, 0.3);
  const std::vector<int> balanced = {1, 0, 1, 0, 1, 0};
  CHECK(auc(flat, balanced) == 0.5);
  CHECK(accuracy(std::vector<double>{0.5, 0.49}, std::vector<int>{1, 0}) == 1.0);

  const std::vector<double> six = {0.2, 0.7, 0.7, 0.4, 0.9, 0.4};
  const std::vector<int> six_y = {0, 1, 0, 1, 1, 0};
  CHECK(auc(six, six_y) == Approx(brute_auc(six, six_y)).epsilon(1e-15));

  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> level(0, 9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(trial) * 7;
    std::vector<double> pr(n);
    std::vector<int> lab(n);
    for (std::size_t i = 0; i < n; ++i) {
      pr[i] = level(rng) / 10.0;  // coarse levels force ties
      lab[i] = static_cast<int>(rng() % 2);
    }
    lab[0] = 0;
    lab[1] = 1;
    const double a = auc(pr, lab);
    CHECK(a == Approx(brute_auc(pr, lab)).epsilon(1e-12));
    std::vector<double> warped(n);
    std::transform(pr.begin(), pr.end(), warped.begin(), [](double x) { return std::exp(3 * x) - 7; });
    CHECK(auc(warped, lab) == Approx(a).epsilon(1e-12));
  }

  const std::vector<int> one_class = {1, 1};
  CHECK_THROWS_AS(auc(p, one_class), UndefinedStatistic);
  const auto scores = auc_acc(p, one_class);
  CHECK_FALSE(scores.auc.has_value());
  CHECK(scores.acc == 0.5);
  CHECK_THROWS_AS(auc(p, std::vector<int>{1}), UsageError);
}

TEST_CASE("PICP and PIAW") {
  const std::vector<PredictionInterval> one = {{0.6, 0.8}};
  CHECK(picp_piaw(one, std::vector<int>{1}).picp == 1.0);
  CHECK(picp_piaw(one, std::vector<int>{0}).picp == 0.0);
  CHECK(picp_piaw(one, std::vector<int>{0}).piaw == Approx(0.2));

  const std::vector<PredictionInterval> two = {{0.2, 0.5}, {0.4, 0.6}};
  const auto s = picp_piaw(two, std::vector<int>{0, 1});
  CHECK(s.picp == 1.0);
  CHECK(s.piaw == Approx(0.25));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<PredictionInterval> iv(200);
  std::vector<int> lab(200);
  for (std::size_t i = 0; i < iv.size(); ++i) {
    const double a = u(rng), b = u(rng);
    iv[i] = {std::min(a, b), std::max(a, b)};
    lab[i] = static_cast<int>(rng() % 2);
  }
  double previous = picp_piaw(iv, lab).picp;
  for (int widen = 0; widen < 10; ++widen) {
    for (auto& x : iv) {
      x.lower = std::max(0.0, x.lower - 0.03);
      x.upper = std::min(1.0, x.upper + 0.03);
    }
    const auto sc = picp_piaw(iv, lab);
    CHECK(sc.picp >= previous);
    CHECK(sc.picp <= 1.0);
    CHECK(sc.piaw <= 1.0);
    previous = sc.picp;
  }
  CHECK_THROWS_AS(picp_piaw({}, {}), UndefinedStatistic);
}

TEST_CASE("Spearman correlation") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> down = {9, 7, 4, 2, 0};
  const std::vector<double> up = {0.1, 0.2, 0.25, 3, 40};
  CHECK(spearman(x, down) == Approx(-1.0));
  CHECK(spearman(x, up) == Approx(1.0));
  CHECK_THROWS_AS(spearman(x, std::vector<double>(5, 2.0)), UndefinedStatistic);
  CHECK_THROWS_AS(spearman(std::vector<double>{1}, std::vector<double>{1}), UndefinedStatistic);

  const std::vector<double> tied = {3, 1, 3, 2, 2, 2, 5};
  CHECK(average_ranks(tied) == brute_ranks(tied));
  const std::vector<double> other = {0.5, 0.5, 0.9, 0.1, 0.3, 0.3, 0.3};
  CHECK(spearman(tied, other) == Approx(brute_pearson(brute_ranks(tied), brute_ranks(other))).epsilon(1e-12));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(30), b(30);
    for (std::size_t i = 0; i < 30; ++i) {
      a[i] = static_cast<double>(rng() % 6);
      b[i] = static_cast<double>(rng() % 4);
    }
    const double s = spearman(a, b);
    CHECK(s == Approx(brute_pearson(brute_ranks(a), brute_ranks(b))).epsilon(1e-12));
    CHECK(std::abs(s) <= 1.0);
  }
}

TEST_CASE("fitting distances") {
  grad::Matrix q(3, 2);
  q << 1, 0, 0, 1, 1, 1;
  const auto d = make_dataset({{"a", "q1", 1}, {"a", "q2", 0}, {"a", "q3", 1}, {"b", "q1", 0}, {"b", "q3", 0}}, q);
  std::vector<std::size_t> all(d.responses.size());
  std::iota(all.begin(), all.end(), 0);

  const std::vector<double> perfect = {1, 0, 1, 0, 0};
  CHECK(fitting_distance(d, all, perfect, DistanceMode::Latent).values.isZero());

  const std::size_t first[] = {0};
  const std::vector<double> p07 = {0.7};
  CHECK(fitting_distance(d, first, p07, DistanceMode::Latent).values(0, 0) == Approx(0.3));

  const std::vector<double> p = {0.7, 0.2, 0.6, 0.9, 0.35};
  const auto latent = fitting_distance(d, all, p, DistanceMode::Latent);
  const auto per_concept = fitting_distance(d, all, p, DistanceMode::Concept);
  REQUIRE(per_concept.values.rows() == 2);
  REQUIRE(per_concept.values.cols() == 2);
  for (Index s = 0; s < 2; ++s) {
    double total = 0.0;
    for (Index k = 0; k < 2; ++k) {
      double expected = 0.0;
      for (std::size_t i = 0; i < d.responses.size(); ++i) {
        const auto& r = d.responses[i];
        if (r.student == s && q(r.question, k) == 1.0) expected += std::abs(p[i] - r.correct);
      }
      CHECK(per_concept.values(s, k) == Approx(expected).epsilon(1e-14));
    }
    for (std::size_t i = 0; i < d.responses.size(); ++i) {
      if (d.responses[i].student == s) total += std::abs(p[i] - d.responses[i].correct);
    }
    CHECK(latent.values(s, 0) == Approx(total).epsilon(1e-14));
  }
}

TEST_CASE("interval projection") {
  const auto d = make_dataset({{"s", "q", 1}});
  const auto irt = make_model({});
  std::mt19937_64 rng(0);
  Posterior post = initialize_posterior(*irt, d.shape(), {}, rng);
  post.block("alpha").mu.setZero();
  post.block("alpha").eta.setConstant(softplus_inverse(1.0));
  post.lambdas[0] = LambdaParams::from_values(1.0, 0.01);
  post.block("beta_diff").mu.setZero();
  post.block("beta_disc").mu.setZero();
  // Question posteriors collapse to a point through a tiny sigma.
  post.block("beta_diff").eta.setConstant(-800.0);
  post.block("beta_disc").eta.setConstant(-800.0);
  std::vector<std::size_t> all = {0};
  GaussianNoise noise(1);
  const auto iv = project_intervals(*irt, post, make_batch(d, all), 50, noise);
  REQUIRE(iv.size() == 1);
  CHECK(iv[0].lower == Approx(logistic(-1.7 * 1.96)).epsilon(1e-12));
  CHECK(iv[0].upper == Approx(logistic(1.7 * 1.96)).epsilon(1e-12));
  CHECK(iv[0].lower == Approx(0.0344).margin(1e-4));
  CHECK(iv[0].upper == Approx(0.9656).margin(1e-4));

  post.block("alpha").eta.setConstant(-800.0);
  post.block("alpha").mu.setConstant(0.3);
  const auto point = predict_center(*irt, post, make_batch(d, all));
  const auto degenerate = project_intervals(*irt, post, make_batch(d, all), 50, noise);
  CHECK(degenerate[0].lower == Approx(point(0)).epsilon(1e-12));
  CHECK(degenerate[0].upper == Approx(point(0)).epsilon(1e-12));
  CHECK(picp_piaw(degenerate, std::vector<int>{1}).piaw == Approx(0.0).margin(1e-12));

  ModelConfig cfg;
  cfg.kind = ModelKind::NeuralCdm;
  cfg.hidden = {8, 4};
  const auto ncdm = make_model(cfg);
  grad::Matrix q(4, 3);
  q << 1, 0, 0, 0, 1, 1, 1, 1, 1, 0, 0, 1;
  std::vector<std::tuple<std::string, std::string, int>> rows;
  for (int s = 0; s < 5; ++s) {
    for (int j = 0; j < 4; ++j) rows.emplace_back("s" + std::to_string(s), "q" + std::to_string(j), (s * j) % 2);
  }
  const auto nd = make_dataset(rows, q);
  Posterior np = initialize_posterior(*ncdm, nd.shape(), {}, rng);
  std::normal_distribution<double> n(0.0, 0.5);
  for (auto& b : np.blocks) {
    for (Index i = 0; i < b.mu.size(); ++i) b.mu.data()[i] += n(rng);
    if (b.decomposed()) b.eta.setConstant(softplus_inverse(0.8));
    else b.eta.setConstant(-800.0);
  }
  std::vector<std::size_t> idx(nd.responses.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto batch = make_batch(nd, idx);
  const auto centre = predict_center(*ncdm, np, batch);
  const auto niv = project_intervals(*ncdm, np, batch, 50, noise);
  for (std::size_t i = 0; i < niv.size(); ++i) {
    CHECK(niv[i].lower <= centre(static_cast<Index>(i)) + 1e-12);
    CHECK(centre(static_cast<Index>(i)) <= niv[i].upper + 1e-12);
    CHECK(niv[i].lower >= 0.0);
    CHECK(niv[i].upper <= 1.0);
  }
}

TEST_CASE("uncertainty correlations") {
  SECTION("constant counts are not computable") {
    std::vector<std::tuple<std::string, std::string, int>> rows;
    for (int s = 0; s < 6; ++s) {
      for (int j = 0; j < 4; ++j) rows.emplace_back("s" + std::to_string(s), "q" + std::to_string(j), (s + j) % 2);
    }
    const auto d = make_dataset(rows);
    const auto model = make_model({});
    std::mt19937_64 rng(1);
    const Posterior post = initialize_posterior(*model, d.shape(), {}, rng);
    std::vector<std::size_t> all(d.responses.size());
    std::iota(all.begin(), all.end(), 0);
    GaussianNoise noise(0);
    const auto a = uncertainty_correlations(*model, post, d, all, 10, noise);
    CHECK_FALSE(a.sigma_vs_count.value.has_value());
    CHECK(a.sigma_vs_count.note.find("not computable") != std::string::npos);
  }

  SECTION("sigma set inversely to the counts") {
    std::vector<std::tuple<std::string, std::string, int>> rows;
    for (int s = 0; s < 6; ++s) {
      for (int j = 0; j <= s; ++j) rows.emplace_back("s" + std::to_string(s), "q" + std::to_string(j), j % 2);
    }
    const auto d = make_dataset(rows);
    const auto model = make_model({});
    std::mt19937_64 rng(1);
    Posterior post = initialize_posterior(*model, d.shape(), {}, rng);
    for (Index s = 0; s < 6; ++s) post.block("alpha").eta(0, s) = softplus_inverse(1.0 / (1.0 + s));
    std::vector<std::size_t> all(d.responses.size());
    std::iota(all.begin(), all.end(), 0);
    GaussianNoise noise(0);
    const auto a = uncertainty_correlations(*model, post, d, all, 10, noise);
    REQUIRE(a.sigma_vs_count.value.has_value());
    CHECK(*a.sigma_vs_count.value == Approx(-1.0));
  }

  SECTION("trained U-IRT on uneven response counts") {
    SynthOptions o;
    o.students = 150;
    o.questions = 30;
    o.sparse_fraction = 0.5;
    o.sparse_questions = 6;
    o.seed = 31;
    const auto syn = synthesize(o);
    const auto split = split_dataset(syn.dataset, {}, 3);
    TrainConfig cfg;
    cfg.max_epochs = 20;
    cfg.patience = 100;
    cfg.batch_size = 128;
    cfg.learning_rate = 0.02;
    const auto model = make_model({});
    const auto r = train(*model, syn.dataset, split, cfg);
    GaussianNoise noise(2);
    const auto a = uncertainty_correlations(*model, r.posterior, syn.dataset, split.train, 50, noise);
    REQUIRE(a.sigma_vs_count.value.has_value());
    CHECK(*a.sigma_vs_count.value < 0.0);
    REQUIRE(a.model_sigma_vs_distance.value.has_value());
    CHECK(std::abs(*a.model_sigma_vs_distance.value) <= 1.0);
  }
}
