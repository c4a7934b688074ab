#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lsor/errors.hpp"
#include "lsor/newton.hpp"
#include "lsor/spt.hpp"

namespace lsor::spt {

void AccuracyBounds::validate() const {
  if (!(mu >= 0.0)) throw DomainError("accuracy bound mu must be non-negative");
  if (!(b3 > 0.0 && b5 > 0.0 && b6 > 0.0 && k0 > 0.0 && a > 0.0 && k1 > 0.0))
    throw DomainError("accuracy constants b3, b5, b6, k0, a, k1 must be positive");
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::QssOnly: return "QssOnly";
    case Verdict::QssPlusBoundaryLayer: return "QssPlusBoundaryLayer";
    case Verdict::Repartition: return "Repartition";
  }
  return "?";
}

double epsilon_star(const AccuracyBounds& b) {
  b.validate();
  const double denom = b.b5 * b.k0 + b.b6 * b.mu;
  return b.b3 / denom;
}

double solve_eps_double_star(double a, double T) {
  if (!(a > 0.0 && T > 0.0)) throw DomainError("decay rate and settle time must be positive");
  const double target = a * T;
  const double cap = std::exp(-1.0);
  if (target >= cap) {
    std::ostringstream os;
    os << "eps*ln(1/eps) = " << target << " has no root in (0, 1/e); the largest attainable value is "
       << cap;
    throw NoSolution(os.str());
  }
  double lo = 0.0, hi = cap;
  for (int i = 0; i < 2000 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double phi = mid * std::log(1.0 / mid);
    (phi < target ? lo : hi) = mid;
  }
  const double phi_lo = lo > 0.0 ? lo * std::log(1.0 / lo) : 0.0;
  const double phi_hi = hi * std::log(1.0 / hi);
  return std::abs(phi_lo - target) <= std::abs(phi_hi - target) && lo > 0.0 ? lo : hi;
}

double solve_T_given_eps(double a, double eps) {
  if (!(a > 0.0)) throw DomainError("decay rate must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  return eps * std::log(1.0 / eps) / a;
}

double decay_rate_from_pair(double T, double eps) {
  if (!(T > 0.0)) throw DomainError("settle time must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  return eps * std::log(1.0 / eps) / T;
}

ReductionDecision assess(const TwoTimeScaleSystem& sys, const AccuracyBounds& b,
                         double T_required) {
  sys.validate();
  ReductionDecision d;
  d.epsilon = sys.epsilon;
  d.eps_star = epsilon_star(b);
  d.settle_time_T = T_required;
  try {
    d.eps_double_star = solve_eps_double_star(b.a, T_required);
    d.eps_double_star_available = true;
  } catch (const NoSolution&) {
    d.eps_double_star = std::numeric_limits<double>::quiet_NaN();
  }
  if (d.epsilon > d.eps_star)
    d.verdict = Verdict::Repartition;
  else if (d.eps_double_star_available && d.epsilon <= d.eps_double_star)
    d.verdict = Verdict::QssOnly;
  else
    d.verdict = Verdict::QssPlusBoundaryLayer;
  return d;
}

Matrix solve_lyapunov(const Matrix& a) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw DomainError("Lyapunov equation needs a square matrix");
  const Eigen::VectorXcd eig = a.eigenvalues();
  if (!(eig.real().array() < 0.0).all())
    throw NotExponentiallyStable("linearized fast subsystem is not Hurwitz");
  const Matrix eye = Matrix::Identity(n, n);
  Matrix k = Matrix::Zero(n * n, n * n);
  const Matrix at = a.transpose();
  // vec(A^T P) = (I kron A^T) vec(P); vec(P A) = (A^T kron I) vec(P).
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      k.block(i * n, j * n, n, n) += eye(i, j) * at;
      k.block(i * n, j * n, n, n) += at(i, j) * eye;
    }
  const Vector rhs = -Eigen::Map<const Vector>(eye.data(), n * n);
  const Vector p = k.fullPivLu().solve(rhs);
  Matrix pm = Eigen::Map<const Matrix>(p.data(), n, n);
  return 0.5 * (pm + pm.transpose());
}

namespace {

Matrix lyapunov_at(const TwoTimeScaleSystem& sys, const Vector& x, const Vector& u,
                   const Vector& guess) {
  const Vector h = qss_solve(sys, x, u, guess);
  const ResidualFn fn = [&](const Vector& z) { return sys.g(x, z, u, 0.0); };
  return solve_lyapunov(forward_difference_jacobian(fn, h, fn(h)));
}

double sensitivity(const TwoTimeScaleSystem& sys, const Vector& x, const Vector& u,
                   const Vector& guess, bool wrt_input) {
  const Vector& base = wrt_input ? u : x;
  double sum = 0.0;
  for (Eigen::Index j = 0; j < base.size(); ++j) {
    const double step = 1e-4 * (1.0 + std::abs(base[j]));
    Vector plus = base, minus = base;
    plus[j] += step;
    minus[j] -= step;
    const Matrix pp = wrt_input ? lyapunov_at(sys, x, plus, guess) : lyapunov_at(sys, plus, u, guess);
    const Matrix pm = wrt_input ? lyapunov_at(sys, x, minus, guess) : lyapunov_at(sys, minus, u, guess);
    const Matrix dp = (pp - pm) / (2.0 * step);
    const double nrm = Eigen::JacobiSVD<Matrix>(dp).singularValues()(0);
    sum += nrm * nrm;
  }
  return std::sqrt(sum);
}

}  // namespace

AccuracyBounds estimate_bounds(const TwoTimeScaleSystem& sys,
                               std::span<const OperatingSample> samples, double mu,
                               const DecayFit& decay) {
  sys.validate();
  if (samples.empty()) throw InsufficientData("bound estimation needs at least one operating sample");
  constexpr double kFloor = 1e-12;
  const Vector guess = sys.qss_guess.size() == sys.dims.m ? sys.qss_guess : Vector::Zero(sys.dims.m);

  AccuracyBounds b;
  b.mu = mu;
  b.b3 = 1.0;
  b.a = decay.a;
  b.k1 = decay.k1;
  double k0 = 0.0, b5 = 0.0, b6 = 0.0;
  for (const auto& s : samples) {
    const Vector h = qss_solve(sys, s.x, s.u, guess);
    k0 = std::max(k0, sys.f(s.x, h, s.u, 0.0).norm());
    b5 = std::max(b5, sensitivity(sys, s.x, s.u, guess, false));
    b6 = std::max(b6, sensitivity(sys, s.x, s.u, guess, true));
  }
  b.k0 = std::max(k0, kFloor);
  b.b5 = std::max(b5, kFloor);
  b.b6 = std::max(b6, kFloor);
  return b;
}

}  // namespace lsor::spt
