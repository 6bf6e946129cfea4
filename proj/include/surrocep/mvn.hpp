#pragma once

// Small dense multivariate-Gaussian toolkit: Cholesky with a relative pivot
// tolerance, conditioning, log-densities and the positive-definite range of
// the third entry of a 3x3 correlation matrix.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "surrocep/errors.hpp"

namespace surrocep {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

/// Relative pivot tolerance used by cholesky().
inline constexpr double kPivotTolerance = 1e-12;
/// Inward shrink applied to PD intervals before they are handed to samplers.
inline constexpr double kIntervalShrink = 1e-9;

template <typename Scalar = double>
struct GaussianJoint {
  Vector<Scalar> mean;
  Matrix<Scalar> covariance;

  GaussianJoint() = default;
  GaussianJoint(Vector<Scalar> m, Matrix<Scalar> s) : mean(std::move(m)), covariance(std::move(s)) {
    if (covariance.rows() != covariance.cols() || covariance.rows() != mean.size()) {
      throw IndexOutOfRange("mean/covariance shape mismatch");
    }
  }

  Index dim() const { return mean.size(); }
};

/// Lower-triangular L with L L^T = m. Throws NotPositiveDefinite when a pivot
/// falls below kPivotTolerance times the largest diagonal entry.
template <typename Derived>
Matrix<typename Derived::Scalar> cholesky(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const Index n = m.rows();
  if (m.cols() != n) throw IndexOutOfRange("cholesky of a non-square matrix");
  Matrix<Scalar> l = Matrix<Scalar>::Zero(n, n);
  if (n == 0) return l;
  const Scalar max_diag = m.diagonal().maxCoeff();
  if (!(max_diag > Scalar(0))) throw NotPositiveDefinite("non-positive diagonal");
  const Scalar tol = Scalar(kPivotTolerance) * max_diag;
  for (Index j = 0; j < n; ++j) {
    Scalar pivot = m(j, j);
    for (Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > tol)) {
      throw NotPositiveDefinite("pivot " + std::to_string(static_cast<double>(pivot)) + " at column " +
                                std::to_string(j));
    }
    const Scalar d = std::sqrt(pivot);
    l(j, j) = d;
    for (Index i = j + 1; i < n; ++i) {
      Scalar v = m(i, j);
      for (Index k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / d;
    }
  }
  return l;
}

template <typename Derived>
bool is_positive_definite(const Eigen::MatrixBase<Derived>& m) {
  try {
    (void)cholesky(m);
    return true;
  } catch (const NotPositiveDefinite&) {
    return false;
  }
}

/// Precomputed conditioning of a joint Gaussian on a fixed index set, for
/// repeated use with different observed values.
template <typename Scalar = double>
class GaussianConditioner {
 public:
  GaussianConditioner(const GaussianJoint<Scalar>& joint, std::span<const Index> observed_idx) {
    const Index n = joint.dim();
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (Index i : observed_idx) {
      if (i < 0 || i >= n) throw IndexOutOfRange("index " + std::to_string(i) + " outside dimension " + std::to_string(n));
      if (seen[static_cast<std::size_t>(i)]) throw IndexOutOfRange("duplicate index " + std::to_string(i));
      seen[static_cast<std::size_t>(i)] = true;
    }
    if (observed_idx.empty() || static_cast<Index>(observed_idx.size()) >= n) {
      throw IndexOutOfRange("observed index set must be a nonempty proper subset");
    }
    observed_.assign(observed_idx.begin(), observed_idx.end());
    for (Index i = 0; i < n; ++i) {
      if (!seen[static_cast<std::size_t>(i)]) free_.push_back(i);
    }
    const auto nf = static_cast<Index>(free_.size());
    const auto no = static_cast<Index>(observed_.size());
    Matrix<Scalar> s11(nf, nf), s12(nf, no), s22(no, no);
    mean_free_.resize(nf);
    mean_observed_.resize(no);
    for (Index a = 0; a < nf; ++a) {
      mean_free_(a) = joint.mean(free_[a]);
      for (Index b = 0; b < nf; ++b) s11(a, b) = joint.covariance(free_[a], free_[b]);
      for (Index b = 0; b < no; ++b) s12(a, b) = joint.covariance(free_[a], observed_[b]);
    }
    for (Index a = 0; a < no; ++a) {
      mean_observed_(a) = joint.mean(observed_[a]);
      for (Index b = 0; b < no; ++b) s22(a, b) = joint.covariance(observed_[a], observed_[b]);
    }
    const Matrix<Scalar> l22 = cholesky(s22);
    // gain = S12 S22^{-1}
    Matrix<Scalar> tmp = l22.template triangularView<Eigen::Lower>().solve(s12.transpose());
    gain_ = l22.transpose().template triangularView<Eigen::Upper>().solve(tmp).transpose();
    covariance_ = s11 - gain_ * s12.transpose();
    covariance_ = Scalar(0.5) * (covariance_ + covariance_.transpose());
  }

  template <typename Derived>
  Vector<Scalar> mean(const Eigen::MatrixBase<Derived>& observed_vals) const {
    if (observed_vals.size() != static_cast<Index>(observed_.size())) {
      throw IndexOutOfRange("observed value count does not match index set");
    }
    return mean_free_ + gain_ * (observed_vals - mean_observed_);
  }

  const Matrix<Scalar>& covariance() const { return covariance_; }
  const Matrix<Scalar>& gain() const { return gain_; }
  const std::vector<Index>& free_indices() const { return free_; }
  const std::vector<Index>& observed_indices() const { return observed_; }

 private:
  std::vector<Index> observed_;
  std::vector<Index> free_;
  Vector<Scalar> mean_free_;
  Vector<Scalar> mean_observed_;
  Matrix<Scalar> gain_;
  Matrix<Scalar> covariance_;
};

/// Distribution of the remaining coordinates (in increasing index order)
/// given the coordinates in observed_idx.
template <typename Scalar, typename Derived>
GaussianJoint<Scalar> conditional_gaussian(const GaussianJoint<Scalar>& joint, std::span<const Index> observed_idx,
                                           const Eigen::MatrixBase<Derived>& observed_vals) {
  GaussianConditioner<Scalar> c(joint, observed_idx);
  return GaussianJoint<Scalar>(c.mean(observed_vals), c.covariance());
}

template <typename Scalar, typename Derived>
Scalar log_density(const GaussianJoint<Scalar>& joint, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != joint.dim()) throw IndexOutOfRange("point dimension does not match joint");
  const Matrix<Scalar> l = cholesky(joint.covariance);
  const Vector<Scalar> z = l.template triangularView<Eigen::Lower>().solve((x - joint.mean).eval());
  const Scalar log_det = Scalar(2) * l.diagonal().array().log().sum();
  const Scalar log_two_pi = std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
  return Scalar(-0.5) * (static_cast<Scalar>(joint.dim()) * log_two_pi + log_det + z.squaredNorm());
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains_open(double v) const { return v > lo && v < hi; }
  bool empty() const { return !(hi > lo); }
  Interval shrunk(double eps = kIntervalShrink) const { return {lo + eps, hi - eps}; }
  Interval intersect(const Interval& o) const { return {std::max(lo, o.lo), std::min(hi, o.hi)}; }
};

/// Open interval of r23 values for which [[1,r12,r13],[r12,1,r23],[r13,r23,1]]
/// is positive definite.
inline Interval pd_bound_third(double r12, double r13) {
  const double centre = r12 * r13;
  const double half = std::sqrt(std::max(0.0, (1.0 - r12 * r12) * (1.0 - r13 * r13)));
  return {centre - half, centre + half};
}

/// Conditional correlations among (S(1), T(0), T(1)). theta11 is identified
/// by the treated arm; theta10 and thetaT never appear in the observed-data
/// likelihood. Under conditional independence S(1) _|_ T(0) | T(1) the value
/// of theta10 is derived as thetaT * theta11 and cannot be set on its own.
class CorrelationState {
 public:
  enum class Entry { Theta11, Theta10, ThetaT };

  static constexpr bool identified(Entry e) { return e == Entry::Theta11; }

  static CorrelationState unconstrained(double theta11, double theta10, double theta_t) {
    CorrelationState c(theta11, theta10, theta_t, false);
    c.check();
    return c;
  }

  static CorrelationState conditionally_independent(double theta11, double theta_t) {
    CorrelationState c(theta11, theta_t * theta11, theta_t, true);
    c.check();
    return c;
  }

  double theta11() const { return theta11_; }
  double theta10() const { return theta10_; }
  double thetaT() const { return theta_t_; }
  bool ci() const { return ci_; }

  /// Correlation matrix in (S(1), T(0), T(1)) order.
  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d r;
    r << 1.0, theta10_, theta11_,
         theta10_, 1.0, theta_t_,
         theta11_, theta_t_, 1.0;
    return r;
  }

  bool positive_definite() const { return is_positive_definite(matrix()); }

 private:
  CorrelationState(double t11, double t10, double tt, bool ci) : theta11_(t11), theta10_(t10), theta_t_(tt), ci_(ci) {}

  void check() const {
    for (double v : {theta11_, theta10_, theta_t_}) {
      if (!(std::abs(v) < 1.0)) throw NotPositiveDefinite("correlation outside (-1, 1)");
    }
    if (!positive_definite()) throw NotPositiveDefinite("correlation matrix is not positive definite");
  }

  double theta11_;
  double theta10_;
  double theta_t_;
  bool ci_;
};

}  // namespace surrocep
