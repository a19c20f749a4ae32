#pragma once

#include <cmath>

#include "vgcl/common.hpp"

namespace vgcl {

/// Adaptive-moment optimizer over a dense parameter matrix.
template <typename Scalar>
class AdamOptimizer {
 public:
  AdamOptimizer(Index rows, Index cols, Scalar learning_rate,
                Scalar beta1 = Scalar(0.9), Scalar beta2 = Scalar(0.999),
                Scalar epsilon = Scalar(1e-8))
      : lr_(learning_rate),
        beta1_(beta1),
        beta2_(beta2),
        eps_(epsilon),
        m_(DenseMatrix<Scalar>::Zero(rows, cols)),
        v_(DenseMatrix<Scalar>::Zero(rows, cols)) {}

  void step(DenseMatrix<Scalar>& params, const DenseMatrix<Scalar>& grad) {
    ++t_;
    m_ = beta1_ * m_ + (Scalar(1) - beta1_) * grad;
    v_.array() =
        beta2_ * v_.array() + (Scalar(1) - beta2_) * grad.array().square();
    const Scalar m_fix = Scalar(1) / (Scalar(1) - std::pow(beta1_, Scalar(t_)));
    const Scalar v_fix = Scalar(1) / (Scalar(1) - std::pow(beta2_, Scalar(t_)));
    params.array() -= lr_ * (m_.array() * m_fix) /
                      ((v_.array() * v_fix).sqrt() + eps_);
  }

  long step_count() const { return t_; }

 private:
  Scalar lr_, beta1_, beta2_, eps_;
  DenseMatrix<Scalar> m_, v_;
  long t_ = 0;
};

}  // namespace vgcl
