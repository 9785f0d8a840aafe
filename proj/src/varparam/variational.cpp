#include "ucd/varparam/variational.hpp"

#include "ucd/errors.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace ucd {

double softplus(double x) { return grad::stable_softplus(x); }

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw ConfigError("softplus_inverse needs a positive value");
  // ln(e^y - 1) = y + ln(1 - e^-y)
  return y + std::log(-std::expm1(-y));
}

double LambdaSet::data_sigma(double tau) const { return lambda0 * std::exp(-lambda1 * tau); }

double effective_sigma(const VariationalVariable& v, const LambdaSet* lambdas) {
  const double model = v.model_sigma();
  if (!v.decomposition) return model;
  if (lambdas == nullptr) {
    throw ConfigError("decomposed variable needs a lambda set to compute its sigma");
  }
  if (v.decomposition->tau < 0.0) throw ConfigError("response count tau must be >= 0");
  return model * lambdas->data_sigma(v.decomposition->tau);
}

double sample(const VariationalVariable& v, double sigma, double eps) {
  return v.transform.to_domain(v.mu + sigma * eps);
}

double kl_to_prior(double mu, double sigma) {
  return 0.5 * (mu * mu + sigma * sigma - 1.0 - 2.0 * std::log(sigma));
}

grad::Var kl_to_prior(grad::Var mu, grad::Var sigma) {
  return 0.5 * (mu * mu + sigma * sigma - 1.0 - 2.0 * grad::log(sigma));
}

ConfidenceInterval confidence_interval(const DomainTransform& t, double mu, double sigma,
                                       double level) {
  if (level != 0.95) throw ConfigError("only the 0.95 confidence level is supported");
  if (sigma < 0.0) throw ConfigError("confidence_interval needs sigma >= 0");
  return {t.to_domain(mu - kZ95 * sigma), t.to_domain(mu + kZ95 * sigma)};
}

double posterior_density(const DomainTransform& t, double mu, double sigma, double x) {
  if (!t.contains(x)) return 0.0;
  const double z = (t.to_unconstrained(x) - mu) / sigma;
  const double log_normal = -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
  return std::exp(log_normal + t.log_abs_jacobian(x));
}

std::string role_name(VariableRole role) {
  switch (role) {
    case VariableRole::Student: return "student";
    case VariableRole::Question: return "question";
    case VariableRole::Function: return "function";
  }
  return "function";
}

VariableRole parse_role(const std::string& name) {
  if (name == "student") return VariableRole::Student;
  if (name == "question") return VariableRole::Question;
  if (name == "function") return VariableRole::Function;
  throw DataError("unknown variable role '" + name + "'");
}

VariationalVariable VariableBlock::variable(grad::Index r, grad::Index c) const {
  VariationalVariable v{mu(r, c), eta(r, c), transform, std::nullopt};
  if (decomposed()) v.decomposition = DataModelDecomposition{tau(r, c), lambda_set};
  return v;
}

const VariableBlock* Posterior::find(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

const VariableBlock& Posterior::block(const std::string& name) const {
  const VariableBlock* b = find(name);
  if (!b) throw UsageError("posterior has no variable block '" + name + "'");
  return *b;
}

VariableBlock& Posterior::block(const std::string& name) {
  return const_cast<VariableBlock&>(std::as_const(*this).block(name));
}

LambdaSet Posterior::lambda_values(int set) const {
  if (lambdas.empty()) throw ConfigError("posterior has no lambda sets");
  const auto idx = static_cast<std::size_t>(set) < lambdas.size() ? static_cast<std::size_t>(set) : 0;
  return lambdas[idx].values();
}

grad::Matrix Posterior::model_sigma(const VariableBlock& b) const {
  return b.eta.unaryExpr(&grad::stable_softplus);
}

grad::Matrix Posterior::data_sigma(const VariableBlock& b) const {
  if (!b.decomposed()) return grad::Matrix::Ones(b.rows(), b.cols());
  const LambdaSet l = lambda_values(b.lambda_set);
  return b.tau.unaryExpr([&l](double t) { return l.data_sigma(t); });
}

grad::Matrix Posterior::effective_sigma(const VariableBlock& b) const {
  return model_sigma(b).cwiseProduct(data_sigma(b));
}

std::size_t Posterior::parameter_count() const {
  std::size_t n = 2 * lambdas.size();
  for (const auto& b : blocks) n += 2 * static_cast<std::size_t>(b.mu.size());
  return n;
}

}  // namespace ucd
