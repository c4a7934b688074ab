#include <algorithm>
#include <array>
#include <cmath>

#include "lsor/errors.hpp"
#include "stepper.hpp"

namespace lsor::odesolve::detail {
namespace {

constexpr std::array<double, 7> kC{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[6][5] = {
    {0, 0, 0, 0, 0},
    {1.0 / 5, 0, 0, 0, 0},
    {3.0 / 40, 9.0 / 40, 0, 0, 0},
    {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
};
constexpr std::array<double, 6> kB{35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784,
                                   11.0 / 84};
constexpr std::array<double, 7> kE{-71.0 / 57600, 0.0,          71.0 / 16695, -71.0 / 1920,
                                   17253.0 / 339200, -22.0 / 525, 1.0 / 40};
// Continuous extension: column j multiplies sigma^(j+1).
constexpr double kP[7][4] = {
    {1.0, -8048581381.0 / 2820520608, 8663915743.0 / 2820520608, -12715105075.0 / 11282082432},
    {0, 0, 0, 0},
    {0, 131558114200.0 / 32700410799, -68118460800.0 / 10900136933, 87487479700.0 / 32700410799},
    {0, -1754552775.0 / 470086768, 14199869525.0 / 1410260304, -10690763975.0 / 1880347072},
    {0, 127303824393.0 / 49829197408, -318862633887.0 / 49829197408,
     701980252875.0 / 199316789632},
    {0, -282668133.0 / 205662961, 2019193451.0 / 616988883, -1453857185.0 / 822651844},
    {0, 40617522.0 / 29380423, -110615467.0 / 29380423, 69997945.0 / 29380423},
};

constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;

class Dopri5 final : public Stepper {
 public:
  explicit Dopri5(const StepContext& ctx) : ctx_(ctx) {}

  void restart(double t, const Vector& y, double t_bound) override {
    t_ = t;
    y_ = y;
    f_ = ctx_.eval(t, y);
    h_ = ctx_.cfg.initial_step > 0.0 ? ctx_.cfg.initial_step
                                     : select_initial_step(ctx_, t, y, f_, 4, t_bound);
    facold_ = 1e-4;
    last_rejected_ = false;
  }

  void step(double t_bound) override {
    const Eigen::Index n = y_.size();
    Matrix k(n, 7);
    for (;;) {
      double h = std::min(h_, ctx_.cfg.max_step);
      bool lands = false;
      if (t_ + h >= t_bound) {
        h = t_bound - t_;
        lands = true;
      }
      ctx_.check_step(h, t_);

      k.col(0) = f_;
      for (int s = 1; s < 6; ++s) {
        Vector ys = y_;
        for (int j = 0; j < s; ++j) ys.noalias() += h * kA[s][j] * k.col(j);
        k.col(s) = ctx_.eval(t_ + kC[s] * h, ys);
      }
      Vector y_new = y_;
      for (int j = 0; j < 6; ++j) y_new.noalias() += h * kB[j] * k.col(j);
      const double t_new = lands ? t_bound : t_ + h;
      k.col(6) = ctx_.eval(t_new, y_new);

      Vector err = Vector::Zero(n);
      for (int j = 0; j < 7; ++j) err.noalias() += h * kE[j] * k.col(j);
      const Vector scale =
          (ctx_.cfg.abs_tol + ctx_.cfg.rel_tol * y_.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array())
              .matrix();
      const double err_norm = rms_norm(err.cwiseQuotient(scale));
      const double fac11 = std::pow(err_norm, kExpo);

      if (err_norm <= 1.0) {
        double fac = fac11 / std::pow(facold_, kBeta);
        fac = std::clamp(fac / kSafety, 1.0 / kMaxFactor, 1.0 / kMinFactor);
        double h_next = h / fac;
        if (last_rejected_) h_next = std::min(h_next, h);
        facold_ = std::max(err_norm, 1e-4);
        last_rejected_ = false;

        segment_.t_begin = t_;
        segment_.t_end = t_new;
        segment_.origin = t_;
        segment_.scale = h;
        segment_.coeffs.resize(n, 5);
        segment_.coeffs.col(0) = y_;
        for (int p = 0; p < 4; ++p) {
          Vector q = Vector::Zero(n);
          for (int j = 0; j < 7; ++j) q.noalias() += kP[j][p] * k.col(j);
          segment_.coeffs.col(p + 1) = h * q;
        }

        t_ = t_new;
        y_ = std::move(y_new);
        f_ = k.col(6);
        // A clipped landing step says nothing about the natural step size.
        h_ = lands ? std::max(h_next, h_) : h_next;
        ++ctx_.stats.steps_accepted;
        return;
      }
      h_ = h / std::min(1.0 / kMinFactor, fac11 / kSafety);
      last_rejected_ = true;
      ++ctx_.stats.steps_rejected;
    }
  }

 private:
  const StepContext& ctx_;
  Vector f_;
  double h_ = 0.0;
  double facold_ = 1e-4;
  bool last_rejected_ = false;
};

}  // namespace

std::unique_ptr<Stepper> make_dopri5(const StepContext& ctx) { return std::make_unique<Dopri5>(ctx); }

}  // namespace lsor::odesolve::detail
