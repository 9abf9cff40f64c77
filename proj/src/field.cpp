#include "qfilab/field.hpp"

#include <algorithm>

namespace qfi {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularMetric: return "SingularMetric";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DerivativeOrderExceeded: return "DerivativeOrderExceeded";
    case ErrorCode::MixedMetric: return "MixedMetric";
    case ErrorCode::UnknownFamily: return "UnknownFamily";
    case ErrorCode::ConditionViolated: return "ConditionViolated";
    case ErrorCode::UncertifiedSymmetry: return "UncertifiedSymmetry";
    case ErrorCode::ZeroLambda: return "ZeroLambda";
    case ErrorCode::NonzeroPotential: return "NonzeroPotential";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::NonIntegrable: return "NonIntegrable";
    case ErrorCode::InfeasibleEnergy: return "InfeasibleEnergy";
    case ErrorCode::NullDirectionRequired: return "NullDirectionRequired";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::BranchInfeasible: return "BranchInfeasible";
    case ErrorCode::DegenerateParams: return "DegenerateParams";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

void throw_order_exceeded(int order) {
  throw Error(ErrorCode::DerivativeOrderExceeded,
              "field supports derivatives up to order " + std::to_string(order));
}

void Domain::exclude(Locus locus) {
  for (const auto& l : loci_)
    if (l.name == locus.name) return;
  loci_.push_back(std::move(locus));
}

double Domain::margin(std::span<const double> q) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& l : loci_) m = std::min(m, l.distance(q));
  return m;
}

Domain Domain::merged(const Domain& other) const {
  Domain out = *this;
  for (const auto& l : other.loci_) out.exclude(l);
  return out;
}

double ScalarField::partial(std::span<const double> q, int i) const {
  auto x = seed_as<Dual1>(q);
  return (*this)(std::span<const Dual1>(x.data(), q.size())).d[static_cast<std::size_t>(i)];
}

double ScalarField::partial2(std::span<const double> q, int i, int j) const {
  auto x = seed_as<Dual2>(q);
  return (*this)(std::span<const Dual2>(x.data(), q.size()))
      .d[static_cast<std::size_t>(i)]
      .d[static_cast<std::size_t>(j)];
}

ScalarField ScalarField::constant(int dim, double c) {
  return make_field<3>(dim, [c](auto q) { return scalar_of<decltype(q)>(c); });
}

CovectorField::CovectorField(std::vector<ScalarField> components) : comps_(std::move(components)) {
  if (comps_.empty() || static_cast<int>(comps_.size()) > kMaxDim)
    throw Error(ErrorCode::DimensionMismatch, "covector needs 1.." + std::to_string(kMaxDim) +
                                                  " components");
  for (const auto& c : comps_)
    if (c.dim() != comps_.front().dim())
      throw Error(ErrorCode::DimensionMismatch, "covector components disagree on argument dimension");
}

int CovectorField::order() const {
  int o = 3;
  for (const auto& c : comps_) o = std::min(o, c.order());
  return o;
}

Domain CovectorField::domain() const {
  Domain d;
  for (const auto& c : comps_) d = d.merged(c.domain());
  return d;
}

std::vector<double> CovectorField::value(std::span<const double> q) const {
  std::vector<double> out;
  for (const auto& c : comps_) out.push_back(c.value(q));
  return out;
}

CovectorField CovectorField::zero(int n, int arg_dim) {
  return CovectorField(std::vector<ScalarField>(static_cast<std::size_t>(n), ScalarField::zero(arg_dim)));
}

Sym2Field::Sym2Field(int n, std::vector<ScalarField> upper) : n_(n) {
  if (n < 1 || n > kMaxDim || static_cast<int>(upper.size()) != n * (n + 1) / 2)
    throw Error(ErrorCode::DimensionMismatch, "sym2 tensor needs n(n+1)/2 components, 1 <= n <= 3");
  comps_.assign(static_cast<std::size_t>(n * n), upper.front());
  std::size_t k = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      if (upper[k].dim() != upper.front().dim())
        throw Error(ErrorCode::DimensionMismatch, "sym2 components disagree on argument dimension");
      comps_[static_cast<std::size_t>(a * n + b)] = upper[k];
      comps_[static_cast<std::size_t>(b * n + a)] = upper[k];
      ++k;
    }
  }
}

int Sym2Field::order() const {
  int o = 3;
  for (const auto& c : comps_) o = std::min(o, c.order());
  return o;
}

Domain Sym2Field::domain() const {
  Domain d;
  for (const auto& c : comps_) d = d.merged(c.domain());
  return d;
}

std::vector<std::vector<double>> Sym2Field::value(std::span<const double> q) const {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(n_),
                                       std::vector<double>(static_cast<std::size_t>(n_)));
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b) out[a][b] = (*this)(a, b).value(q);
  return out;
}

Sym2Field Sym2Field::zero(int n, int arg_dim) {
  return Sym2Field(n, std::vector<ScalarField>(static_cast<std::size_t>(n * (n + 1) / 2),
                                               ScalarField::zero(arg_dim)));
}

}  // namespace qfi
