#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "lsor/errors.hpp"
#include "stepper.hpp"

namespace lsor::odesolve::detail {
namespace {

constexpr int kMaxOrder = 5;
constexpr int kNewtonMaxIter = 4;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;

struct BdfCoefficients {
  std::array<double, kMaxOrder + 2> gamma{};
  std::array<double, kMaxOrder + 2> alpha{};
  std::array<double, kMaxOrder + 2> error_const{};

  BdfCoefficients() {
    for (int k = 1; k <= kMaxOrder + 1; ++k) gamma[k] = gamma[k - 1] + 1.0 / k;
    for (int k = 0; k <= kMaxOrder + 1; ++k) {
      alpha[k] = gamma[k];
      error_const[k] = 1.0 / (k + 1);
    }
  }
};

const BdfCoefficients kCoef;

// Transformation matrix taking backward differences at spacing h to spacing
// factor*h.
Matrix compute_r(int order, double factor) {
  Matrix m = Matrix::Zero(order + 1, order + 1);
  m.row(0).setOnes();
  for (int i = 1; i <= order; ++i)
    for (int j = 1; j <= order; ++j) m(i, j) = (i - 1 - factor * j) / i;
  for (int i = 1; i <= order; ++i) m.row(i) = m.row(i).cwiseProduct(m.row(i - 1));
  return m;
}

void change_d(Matrix& d, int order, double factor) {
  const Matrix r = compute_r(order, factor);
  const Matrix u = compute_r(order, 1.0);
  const Matrix ru = r * u;
  d.leftCols(order + 1) = (d.leftCols(order + 1) * ru).eval();
}

// Coefficients of prod_{i<j} (s + i) / (i + 1) in powers of s.
std::vector<Vector> difference_basis(int order) {
  std::vector<Vector> basis;
  Vector p = Vector::Ones(1);
  basis.push_back(p);
  for (int i = 0; i < order; ++i) {
    Vector next = Vector::Zero(p.size() + 1);
    next.head(p.size()) += p * (static_cast<double>(i) / (i + 1));
    next.tail(p.size()) += p / (i + 1);
    p = next;
    basis.push_back(p);
  }
  return basis;
}

class Bdf final : public Stepper {
 public:
  explicit Bdf(const StepContext& ctx) : ctx_(ctx) {
    newton_tol_ = std::max(10 * std::numeric_limits<double>::epsilon() / ctx.cfg.rel_tol,
                           std::min(0.03, std::sqrt(ctx.cfg.rel_tol)));
  }

  void restart(double t, const Vector& y, double t_bound) override {
    t_ = t;
    y_ = y;
    const Eigen::Index n = y.size();
    const Vector f0 = ctx_.eval(t, y);
    h_abs_ = ctx_.cfg.initial_step > 0.0 ? ctx_.cfg.initial_step
                                         : select_initial_step(ctx_, t, y, f0, 1, t_bound);
    d_ = Matrix::Zero(n, kMaxOrder + 3);
    d_.col(0) = y;
    d_.col(1) = f0 * h_abs_;
    order_ = 1;
    n_equal_steps_ = 0;
    jac_ = ctx_.jacobian(t, y);
    jac_current_ = true;
    lu_valid_ = false;
  }

  void step(double t_bound) override {
    const double max_step = ctx_.cfg.max_step;
    if (h_abs_ > max_step) {
      change_d(d_, order_, max_step / h_abs_);
      h_abs_ = max_step;
      n_equal_steps_ = 0;
      lu_valid_ = false;
    }
    const Eigen::Index n = y_.size();
    const Matrix eye = Matrix::Identity(n, n);
    const double rtol = ctx_.cfg.rel_tol;
    const double atol = ctx_.cfg.abs_tol;

    Vector y_new, d;
    double t_new = t_, error_norm = 0.0, safety = 0.0;
    Vector scale;
    for (;;) {
      ctx_.check_step(h_abs_, t_);
      t_new = t_ + h_abs_;
      if (t_new >= t_bound) {
        t_new = t_bound;
        change_d(d_, order_, (t_new - t_) / h_abs_);
        h_abs_ = t_new - t_;
        n_equal_steps_ = 0;
        lu_valid_ = false;
      }
      const double h = h_abs_;
      const Vector y_predict = d_.leftCols(order_ + 1).rowwise().sum();
      scale = (atol + rtol * y_predict.cwiseAbs().array()).matrix();
      Vector psi = Vector::Zero(n);
      for (int j = 1; j <= order_; ++j) psi.noalias() += kCoef.gamma[j] * d_.col(j);
      psi /= kCoef.alpha[order_];
      const double c = h / kCoef.alpha[order_];

      bool converged = false;
      int n_iter = 0;
      for (;;) {
        if (!lu_valid_) {
          lu_.compute(eye - c * jac_);
          lu_valid_ = true;
          ++ctx_.stats.lu_decompositions;
        }
        converged = solve_system(t_new, y_predict, c, psi, scale, n_iter, y_new, d);
        if (converged || jac_current_) break;
        jac_ = ctx_.jacobian(t_new, y_predict);
        jac_current_ = true;
        lu_valid_ = false;
      }
      if (!converged) {
        h_abs_ *= 0.5;
        change_d(d_, order_, 0.5);
        n_equal_steps_ = 0;
        lu_valid_ = false;
        ++ctx_.stats.steps_rejected;
        continue;
      }

      safety = 0.9 * (2 * kNewtonMaxIter + 1) / (2 * kNewtonMaxIter + n_iter);
      scale = (atol + rtol * y_new.cwiseAbs().array()).matrix();
      error_norm = rms_norm((kCoef.error_const[order_] * d).cwiseQuotient(scale));
      if (error_norm > 1.0) {
        const double factor =
            std::max(kMinFactor, safety * std::pow(error_norm, -1.0 / (order_ + 1)));
        h_abs_ *= factor;
        change_d(d_, order_, factor);
        n_equal_steps_ = 0;
        ++ctx_.stats.steps_rejected;
        continue;
      }
      break;
    }

    ++ctx_.stats.steps_accepted;
    ++n_equal_steps_;
    jac_current_ = false;
    const double t_old = t_;
    t_ = t_new;
    y_ = y_new;

    d_.col(order_ + 2) = d - d_.col(order_ + 1);
    d_.col(order_ + 1) = d;
    for (int i = order_; i >= 0; --i) d_.col(i) += d_.col(i + 1);

    store_segment(t_old);

    if (n_equal_steps_ < order_ + 1) return;

    const double inf = std::numeric_limits<double>::infinity();
    double error_m_norm = inf, error_p_norm = inf;
    if (order_ > 1)
      error_m_norm =
          rms_norm((kCoef.error_const[order_ - 1] * d_.col(order_)).cwiseQuotient(scale));
    if (order_ < kMaxOrder)
      error_p_norm =
          rms_norm((kCoef.error_const[order_ + 1] * d_.col(order_ + 2)).cwiseQuotient(scale));
    const std::array<double, 3> norms{error_m_norm, error_norm, error_p_norm};
    std::array<double, 3> factors{};
    for (int i = 0; i < 3; ++i) {
      const double e = norms[i];
      factors[i] = e == 0.0 ? inf : std::pow(e, -1.0 / (order_ + i));
    }
    const int best = static_cast<int>(std::max_element(factors.begin(), factors.end()) - factors.begin());
    order_ += best - 1;
    const double factor = std::min(kMaxFactor, safety * factors[best]);
    h_abs_ *= factor;
    change_d(d_, order_, factor);
    n_equal_steps_ = 0;
    lu_valid_ = false;
  }

 private:
  bool solve_system(double t_new, const Vector& y_predict, double c, const Vector& psi,
                    const Vector& scale, int& n_iter, Vector& y, Vector& d) {
    d = Vector::Zero(y_predict.size());
    y = y_predict;
    double dy_norm_old = -1.0;
    for (int k = 0; k < kNewtonMaxIter; ++k) {
      n_iter = k + 1;
      const Vector f = ctx_.eval_raw(t_new, y);
      if (!f.allFinite()) return false;
      const Vector dy = lu_.solve(c * f - psi - d);
      const double dy_norm = rms_norm(dy.cwiseQuotient(scale));
      double rate = -1.0;
      if (dy_norm_old > 0.0) {
        rate = dy_norm / dy_norm_old;
        if (rate >= 1.0 ||
            std::pow(rate, kNewtonMaxIter - k) / (1.0 - rate) * dy_norm > newton_tol_)
          return false;
      }
      y += dy;
      d += dy;
      if (dy_norm == 0.0 || (rate >= 0.0 && rate / (1.0 - rate) * dy_norm < newton_tol_))
        return true;
      dy_norm_old = dy_norm;
    }
    return false;
  }

  void store_segment(double t_old) {
    const auto basis = difference_basis(order_);
    segment_.t_begin = t_old;
    segment_.t_end = t_;
    segment_.origin = t_;
    segment_.scale = h_abs_;
    segment_.coeffs = Matrix::Zero(y_.size(), order_ + 1);
    for (int j = 0; j <= order_; ++j)
      for (Eigen::Index k = 0; k < basis[j].size(); ++k)
        segment_.coeffs.col(k) += basis[j][k] * d_.col(j);
    // The constant term is the step's end state; keep it exact.
    segment_.coeffs.col(0) = y_;
  }

  const StepContext& ctx_;
  double newton_tol_ = 0.0;
  double h_abs_ = 0.0;
  int order_ = 1;
  int n_equal_steps_ = 0;
  Matrix d_;
  Matrix jac_;
  bool jac_current_ = false;
  Eigen::PartialPivLU<Matrix> lu_;
  bool lu_valid_ = false;
};

}  // namespace

std::unique_ptr<Stepper> make_bdf(const StepContext& ctx) { return std::make_unique<Bdf>(ctx); }

}  // namespace lsor::odesolve::detail
