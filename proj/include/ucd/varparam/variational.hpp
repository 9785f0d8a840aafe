#pragma once

#include "ucd/grad/tape.hpp"
#include "ucd/varparam/transform.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace ucd {

/// z for a two-sided 95% interval; fixed rather than computed so results are
/// bit-reproducible.
inline constexpr double kZ95 = 1.96;

double softplus(double x);
/// Inverse of softplus on (0, inf).
double softplus_inverse(double y);

/// Weights of the data-uncertainty factor sigma_d = lambda0 * exp(-lambda1 * tau).
struct LambdaSet {
  double lambda0 = 1.0;
  double lambda1 = 0.01;

  /// Learnable form: both weights are softplus of an unconstrained raw value.
  static LambdaSet from_raw(double raw0, double raw1) {
    return {softplus(raw0), softplus(raw1)};
  }
  double data_sigma(double tau) const;
};

/// Raw (pre-softplus) lambda parameters as stored and optimized.
struct LambdaParams {
  double raw0 = 0.0;
  double raw1 = 0.0;

  static LambdaParams from_values(double lambda0, double lambda1) {
    return {softplus_inverse(lambda0), softplus_inverse(lambda1)};
  }
  LambdaSet values() const { return LambdaSet::from_raw(raw0, raw1); }
};

/// Diagnostic variables split sigma into a model part and a data part that
/// shrinks with the number of related responses tau.
struct DataModelDecomposition {
  double tau = 0.0;
  int lambda_set = 0;
};

/// One latent scalar with an underlying normal N(mu, sigma^2), where
/// sigma = softplus(eta) (times sigma_d when decomposed).
struct VariationalVariable {
  double mu = 0.0;
  double eta = 0.0;
  DomainTransform transform;
  std::optional<DataModelDecomposition> decomposition;

  double model_sigma() const { return softplus(eta); }
};

/// Throws ConfigError when the variable is decomposed and no lambdas are given.
double effective_sigma(const VariationalVariable& v, const LambdaSet* lambdas);

/// g(mu + sigma * eps).
double sample(const VariationalVariable& v, double sigma, double eps);

/// KL[N(mu, sigma^2) || N(0, 1)]. The prior of every domain is the pushforward
/// of N(0, 1) through the same g as the posterior, and KL is invariant under
/// a shared bijection, so the closed form in the unconstrained space is exact.
double kl_to_prior(double mu, double sigma);
inline double kl_to_prior(const VariationalVariable& v, double sigma) {
  return kl_to_prior(v.mu, sigma);
}
/// Elementwise graph version; returns a matrix of per-entry KL terms.
grad::Var kl_to_prior(grad::Var mu, grad::Var sigma);

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
};

/// (g(mu - z sigma), g(mu + z sigma)); only level 0.95 is supported.
ConfidenceInterval confidence_interval(const DomainTransform& t, double mu, double sigma,
                                       double level = 0.95);
inline ConfidenceInterval confidence_interval(const VariationalVariable& v, double sigma,
                                              double level = 0.95) {
  return confidence_interval(v.transform, v.mu, sigma, level);
}

/// Density of g(N(mu, sigma^2)) at x; sigma must be positive.
double posterior_density(const DomainTransform& t, double mu, double sigma, double x);

enum class VariableRole { Student, Question, Function };

std::string role_name(VariableRole role);
VariableRole parse_role(const std::string& name);

/// A matrix of independent variational variables sharing one transform.
/// For student/question blocks each column is one entity (rows = dimensions);
/// function blocks are network weights stored in their natural shape.
struct VariableBlock {
  std::string name;
  VariableRole role = VariableRole::Function;
  DomainTransform transform;
  grad::Matrix mu;
  grad::Matrix eta;
  /// Related-response counts, same shape as mu; empty for function blocks.
  grad::Matrix tau;
  int lambda_set = 0;

  bool decomposed() const { return role != VariableRole::Function; }
  grad::Index rows() const { return mu.rows(); }
  grad::Index cols() const { return mu.cols(); }
  VariationalVariable variable(grad::Index r, grad::Index c) const;
};

/// All variational parameters of a model: the blocks plus the learnable
/// lambda sets (index 0 students, index 1 questions; a single set when shared).
struct Posterior {
  std::vector<VariableBlock> blocks;
  std::vector<LambdaParams> lambdas;

  const VariableBlock& block(const std::string& name) const;
  VariableBlock& block(const std::string& name);
  const VariableBlock* find(const std::string& name) const;

  LambdaSet lambda_values(int set) const;
  /// Effective sigma of every entry of a block (sigma_m * sigma_d when decomposed).
  grad::Matrix effective_sigma(const VariableBlock& b) const;
  grad::Matrix model_sigma(const VariableBlock& b) const;
  grad::Matrix data_sigma(const VariableBlock& b) const;
  std::size_t parameter_count() const;
};

}  // namespace ucd
