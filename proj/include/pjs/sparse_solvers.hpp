#pragma once

// Single-signal and joint (multiple measurement vector) sparse coding.
//
//   somp     greedy simultaneous orthogonal matching pursuit for
//              min 1/2 ||Y - DC||_F^2  s.t.  at most L nonzero rows of C
//   mfocuss  regularized M-FOCUSS for
//              min 1/2 ||Y - DC||_F^2 + lambda * sum_j ||C_j||_2
//
// Both operate on a Dictionary whose columns (atoms) have unit l2 norm.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/QR>

#include "pjs/error.hpp"

namespace pjs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kUnitNormTolerance = 1e-9;

/// M x N matrix of unit-norm atoms plus its cached Gram matrix.
class Dictionary {
 public:
  explicit Dictionary(Matrix atoms) : atoms_(std::move(atoms)) {
    if (atoms_.rows() < 1 || atoms_.cols() < 1)
      throw InvalidInput("dictionary must have at least one row and one atom");
    if (!atoms_.allFinite()) throw InvalidInput("dictionary contains non-finite entries");
    for (Index j = 0; j < atoms_.cols(); ++j) {
      const double norm = atoms_.col(j).norm();
      if (std::abs(norm - 1.0) > kUnitNormTolerance)
        throw InvalidInput("dictionary atom " + std::to_string(j) + " is not unit norm (" +
                           std::to_string(norm) + ")");
    }
    gram_ = atoms_.transpose() * atoms_;
  }

  /// Scales every column to unit norm. Zero columns are rejected.
  static Dictionary normalized(Matrix raw) {
    for (Index j = 0; j < raw.cols(); ++j) {
      const double norm = raw.col(j).norm();
      if (!(norm > 0.0)) throw InvalidInput("cannot normalize zero atom " + std::to_string(j));
      raw.col(j) /= norm;
    }
    return Dictionary(std::move(raw));
  }

  const Matrix& atoms() const { return atoms_; }
  const Matrix& gram() const { return gram_; }
  Index signal_dim() const { return atoms_.rows(); }
  Index atom_count() const { return atoms_.cols(); }

 private:
  Matrix atoms_;
  Matrix gram_;
};

/// Signals coded jointly; one column per signal.
class SignalGroup {
 public:
  explicit SignalGroup(Matrix signals) : signals_(std::move(signals)) {
    if (signals_.cols() < 1) throw InvalidInput("signal group needs at least one column");
    if (!signals_.allFinite()) throw InvalidInput("signal group contains non-finite entries");
  }
  static SignalGroup single(const Vector& y) { return SignalGroup(Matrix(y)); }

  const Matrix& signals() const { return signals_; }
  Index size() const { return signals_.cols(); }
  Index signal_dim() const { return signals_.rows(); }

 private:
  Matrix signals_;
};

/// Coefficients C (N x group size) and its row support.
struct SparseCode {
  Matrix coefficients;
  std::vector<Index> active_rows;  // ascending
  int iterations = 0;
  bool converged = true;
  /// M-FOCUSS only: objective before the first update followed by one entry per iteration.
  std::vector<double> objective_trace;
};

/// 1/2 ||Y - DC||_F^2 + lambda ||C||_{2,1}
inline double mmv_objective(const Matrix& atoms, const Matrix& signals, const Matrix& coefficients,
                            double lambda) {
  const double fit = 0.5 * (signals - atoms * coefficients).squaredNorm();
  return fit + lambda * coefficients.rowwise().norm().sum();
}

namespace detail {

inline void check_dims(const Dictionary& dict, const SignalGroup& group) {
  if (dict.signal_dim() != group.signal_dim())
    throw InvalidInput("dimension mismatch: dictionary atoms have " +
                       std::to_string(dict.signal_dim()) + " rows, signals have " +
                       std::to_string(group.signal_dim()));
}

inline std::vector<Index> nonzero_rows(const Matrix& c) {
  std::vector<Index> rows;
  for (Index j = 0; j < c.rows(); ++j)
    if (c.row(j).squaredNorm() > 0.0) rows.push_back(j);
  return rows;
}

}  // namespace detail

/// Simultaneous OMP. Each step adds the inactive atom with the largest
/// ||R^T d_j||_2 (lowest index wins ties) and refits all active coefficients
/// by least squares over every column of Y. Stops early once the residual
/// has no correlation left with any inactive atom.
inline SparseCode somp(const Dictionary& dict, const SignalGroup& group, int sparsity) {
  detail::check_dims(dict, group);
  const Matrix& D = dict.atoms();
  const Matrix& Y = group.signals();
  const Index n_atoms = dict.atom_count();

  SparseCode code;
  code.coefficients = Matrix::Zero(n_atoms, Y.cols());
  if (sparsity < 0) throw InvalidInput("sparsity must be non-negative");
  if (sparsity == 0) return code;
  if (sparsity > std::min(dict.signal_dim(), n_atoms))
    throw InvalidInput("sparsity " + std::to_string(sparsity) + " exceeds min(M, N)");

  // Correlations are tracked in coefficient space: D^T R = D^T Y - G C.
  const Matrix dty = D.transpose() * Y;
  Matrix correlation = dty;
  std::vector<Index> active;
  std::vector<char> is_active(static_cast<std::size_t>(n_atoms), 0);
  Matrix active_coeffs;
  // A residual this small relative to the signal is numerically zero.
  const double floor = 1e-24 * std::max(1.0, dty.squaredNorm());

  for (int step = 0; step < sparsity; ++step) {
    Index best = -1;
    double best_score = -1.0;
    for (Index j = 0; j < n_atoms; ++j) {
      if (is_active[static_cast<std::size_t>(j)]) continue;
      const double score = correlation.row(j).squaredNorm();
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    if (best < 0 || best_score <= floor) break;

    active.push_back(best);
    is_active[static_cast<std::size_t>(best)] = 1;
    ++code.iterations;

    Matrix sub(D.rows(), static_cast<Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) sub.col(static_cast<Index>(a)) = D.col(active[a]);
    active_coeffs = sub.colPivHouseholderQr().solve(Y);

    correlation = dty;
    for (std::size_t a = 0; a < active.size(); ++a)
      correlation.noalias() -= dict.gram().col(active[a]) * active_coeffs.row(static_cast<Index>(a));
  }

  for (std::size_t a = 0; a < active.size(); ++a)
    code.coefficients.row(active[a]) = active_coeffs.row(static_cast<Index>(a));
  code.active_rows = detail::nonzero_rows(code.coefficients);
  return code;
}

struct MFocussOptions {
  double lambda = 0.001;
  double tol = 1e-6;
  int max_iter = 100;
  bool record_objective = false;
};

/// Rows whose l2 norm drops below this are pinned to zero.
inline constexpr double kFrozenRowNorm = 1e-12;

/// Regularized M-FOCUSS:  C <- W D^T (D W D^T + lambda I)^{-1} Y,  W = diag(||C_j||_2),
/// started from C = D^T Y. Each update minimizes a quadratic majorizer of the
/// l2,1 objective at the current iterate, so the objective never increases.
inline SparseCode mfocuss(const Dictionary& dict, const SignalGroup& group, const MFocussOptions& opt) {
  detail::check_dims(dict, group);
  if (!(opt.lambda >= 0.0) || !std::isfinite(opt.lambda)) throw InvalidInput("lambda must be >= 0");
  if (!(opt.tol > 0.0)) throw InvalidInput("tol must be > 0");
  if (opt.max_iter < 1) throw InvalidInput("max_iter must be positive");

  const Matrix& D = dict.atoms();
  const Matrix& Y = group.signals();
  const Index m = D.rows();
  const Index n_atoms = D.cols();

  SparseCode code;
  Matrix c = D.transpose() * Y;
  if (opt.record_objective) code.objective_trace.push_back(mmv_objective(D, Y, c, opt.lambda));
  code.converged = false;

  Vector weights(n_atoms);
  Matrix scaled(m, n_atoms);
  Matrix system(m, m);
  for (int it = 1; it <= opt.max_iter; ++it) {
    weights = c.rowwise().norm();
    for (Index j = 0; j < n_atoms; ++j)
      if (weights(j) < kFrozenRowNorm) weights(j) = 0.0;

    Matrix next;
    if (weights.maxCoeff() == 0.0) {
      next = Matrix::Zero(n_atoms, Y.cols());
    } else {
      // D W D^T = (D W^{1/2})(D W^{1/2})^T
      scaled = D * weights.cwiseSqrt().asDiagonal();
      system.setZero();
      system.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
      system.diagonal().array() += opt.lambda;
      Eigen::LLT<Matrix, Eigen::Lower> llt(system);
      if (llt.info() != Eigen::Success)
        throw InvalidInput("M-FOCUSS system is singular; use lambda > 0");
      next = weights.asDiagonal() * (D.transpose() * llt.solve(Y));
    }

    const double delta = (next - c).norm();
    c = std::move(next);
    code.iterations = it;
    if (opt.record_objective) code.objective_trace.push_back(mmv_objective(D, Y, c, opt.lambda));
    if (delta < opt.tol) {
      code.converged = true;
      break;
    }
  }

  code.coefficients = std::move(c);
  code.active_rows = detail::nonzero_rows(code.coefficients);
  return code;
}

/// l1-regularized coding of one signal: M-FOCUSS on a one-column group.
inline SparseCode sparse_code_single(const Dictionary& dict, const Vector& signal,
                                     const MFocussOptions& opt) {
  return mfocuss(dict, SignalGroup::single(signal), opt);
}

}  // namespace pjs
