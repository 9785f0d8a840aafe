#pragma once

#include "ucd/grad/tape.hpp"

#include <string>

namespace ucd {

enum class DomainKind { Real, HalfLine, Interval };

/// Bijection between a variable's domain and the real line.
///
///   Real:           h(x) = x,                    g(z) = z
///   HalfLine(a):    h(x) = ln(x - a),            g(z) = e^z + a
///   Interval(a, b): h(x) = logit((x-a)/(b-a)),   g(z) = sigmoid(z)(b-a) + a
///
/// A variational variable is parameterized by a normal in the unconstrained
/// space; samples are pushed through g.
class DomainTransform {
 public:
  DomainTransform() = default;

  static DomainTransform real() { return DomainTransform(DomainKind::Real, 0.0, 0.0); }
  static DomainTransform half_line(double lower = 0.0);
  static DomainTransform interval(double lower = 0.0, double upper = 1.0);

  DomainKind kind() const { return kind_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }

  /// h: domain -> R.
  double to_unconstrained(double x) const;
  /// g: R -> domain.
  double to_domain(double z) const;
  grad::Var to_domain(grad::Var z) const;
  grad::Matrix to_domain(const grad::Matrix& z) const;
  /// ln |h'(x)|, the log-Jacobian of the pushforward density.
  double log_abs_jacobian(double x) const;
  bool contains(double x) const;

  std::string name() const;
  static DomainTransform parse(const std::string& name, double lower, double upper);

  friend bool operator==(const DomainTransform&, const DomainTransform&) = default;

 private:
  DomainTransform(DomainKind kind, double lower, double upper)
      : kind_(kind), lower_(lower), upper_(upper) {}

  DomainKind kind_ = DomainKind::Real;
  double lower_ = 0.0;
  double upper_ = 0.0;
};

}  // namespace ucd
