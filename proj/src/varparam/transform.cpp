#include "ucd/varparam/transform.hpp"

#include "ucd/errors.hpp"

#include <cmath>
#include <limits>

namespace ucd {

DomainTransform DomainTransform::half_line(double lower) {
  return DomainTransform(DomainKind::HalfLine, lower, std::numeric_limits<double>::infinity());
}

DomainTransform DomainTransform::interval(double lower, double upper) {
  if (!(upper > lower)) throw ConfigError("interval domain needs upper > lower");
  return DomainTransform(DomainKind::Interval, lower, upper);
}

double DomainTransform::to_unconstrained(double x) const {
  switch (kind_) {
    case DomainKind::Real: return x;
    case DomainKind::HalfLine: return std::log(x - lower_);
    case DomainKind::Interval: {
      const double u = (x - lower_) / (upper_ - lower_);
      return std::log(u) - std::log1p(-u);
    }
  }
  return x;
}

double DomainTransform::to_domain(double z) const {
  switch (kind_) {
    case DomainKind::Real: return z;
    case DomainKind::HalfLine: return std::exp(z) + lower_;
    case DomainKind::Interval: return grad::stable_sigmoid(z) * (upper_ - lower_) + lower_;
  }
  return z;
}

grad::Var DomainTransform::to_domain(grad::Var z) const {
  switch (kind_) {
    case DomainKind::Real: return z;
    case DomainKind::HalfLine: return lower_ == 0.0 ? grad::exp(z) : grad::exp(z) + lower_;
    case DomainKind::Interval:
      if (lower_ == 0.0 && upper_ == 1.0) return grad::sigmoid(z);
      return grad::sigmoid(z) * (upper_ - lower_) + lower_;
  }
  return z;
}

grad::Matrix DomainTransform::to_domain(const grad::Matrix& z) const {
  return z.unaryExpr([this](double v) { return to_domain(v); });
}

double DomainTransform::log_abs_jacobian(double x) const {
  switch (kind_) {
    case DomainKind::Real: return 0.0;
    case DomainKind::HalfLine: return -std::log(x - lower_);
    case DomainKind::Interval: {
      // h'(x) = (b - a) / ((x - a)(b - x))
      return std::log(upper_ - lower_) - std::log(x - lower_) - std::log(upper_ - x);
    }
  }
  return 0.0;
}

bool DomainTransform::contains(double x) const {
  switch (kind_) {
    case DomainKind::Real: return std::isfinite(x);
    case DomainKind::HalfLine: return std::isfinite(x) && x > lower_;
    case DomainKind::Interval: return x > lower_ && x < upper_;
  }
  return false;
}

std::string DomainTransform::name() const {
  switch (kind_) {
    case DomainKind::Real: return "real";
    case DomainKind::HalfLine: return "half_line";
    case DomainKind::Interval: return "interval";
  }
  return "real";
}

DomainTransform DomainTransform::parse(const std::string& name, double lower, double upper) {
  if (name == "real") return real();
  if (name == "half_line") return half_line(lower);
  if (name == "interval") return interval(lower, upper);
  throw DataError("unknown domain transform '" + name + "'");
}

}  // namespace ucd
