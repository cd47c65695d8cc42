#pragma once

// Dense complex/real kernels behind the solvers, plus a sparse generalized
// eigensolver for the lattice spectra. Eigen provides the factorizations.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>

#include "artbg/errors.hpp"

namespace artbg {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// Solves A X = B by LU with partial pivoting.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> lu_solve(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& b) {
  if (a.rows() != a.cols()) throw InvalidArgument("lu_solve: matrix must be square");
  if (a.rows() != b.rows()) throw InvalidArgument("lu_solve: right-hand side has wrong row count");
  if (!a.allFinite() || !b.allFinite()) throw InvalidArgument("lu_solve: non-finite entries");
  Eigen::PartialPivLU<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> lu(a);
  const auto d = lu.matrixLU().diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (d(i) == Scalar(0)) throw SingularMatrix("lu_solve: exactly singular pivot at row " + std::to_string(i));
  return lu.solve(b);
}

/// Factor once, solve many right-hand sides.
class ComplexLu {
 public:
  explicit ComplexLu(const ComplexMatrix& a) : lu_(a) {
    const auto d = lu_.matrixLU().diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (d(i) == std::complex<double>(0.0)) throw SingularMatrix("exactly singular pivot at row " + std::to_string(i));
  }
  ComplexMatrix solve(const ComplexMatrix& b) const { return lu_.solve(b); }

 private:
  Eigen::PartialPivLU<ComplexMatrix> lu_;
};

struct HermitianEig {
  RealVector values;     // ascending
  ComplexMatrix vectors; // unitary, column j pairs with values(j)
};

inline void require_hermitian(const ComplexMatrix& a, const char* who) {
  if (a.rows() != a.cols()) throw InvalidArgument(std::string(who) + ": matrix must be square");
  const double scale = a.norm();
  if ((a - a.adjoint()).norm() > 1e-10 * scale)
    throw InvalidArgument(std::string(who) + ": matrix is not Hermitian within tolerance");
}

inline HermitianEig hermitian_eig(const ComplexMatrix& a) {
  require_hermitian(a, "hermitian_eig");
  const ComplexMatrix sym = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sym);
  if (es.info() != Eigen::Success) throw SolverFailure("hermitian_eig: eigensolver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// |A| = V |Lambda| V* for Hermitian A.
inline ComplexMatrix operator_abs(const ComplexMatrix& a) {
  const auto e = hermitian_eig(a);
  ComplexMatrix out = e.vectors * e.values.cwiseAbs().asDiagonal() * e.vectors.adjoint();
  return 0.5 * (out + out.adjoint());
}

struct GeneralizedEig {
  RealVector values;   // ascending
  RealMatrix vectors;  // B-orthonormal columns
};

/// Smallest `count` eigenpairs of A v = lambda B v, A symmetric, B SPD.
inline GeneralizedEig gen_symdef_eig(const RealMatrix& a, const RealMatrix& b, int count) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw InvalidArgument("gen_symdef_eig: dimension mismatch");
  if (count < 1) throw InvalidArgument("gen_symdef_eig: count must be >= 1");
  Eigen::LLT<RealMatrix> chol(b);
  if (chol.info() != Eigen::Success) throw InvalidArgument("gen_symdef_eig: B is not positive definite");
  const RealMatrix as = 0.5 * (a + a.transpose());
  const RealMatrix bs = 0.5 * (b + b.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<RealMatrix> es(as, bs, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw SolverFailure("gen_symdef_eig: eigensolver did not converge");
  const Eigen::Index m = std::min<Eigen::Index>(count, a.rows());
  return {es.eigenvalues().head(m), es.eigenvectors().leftCols(m)};
}

struct SubspaceOptions {
  double backward_tol = 1e-10;  // ||A x - l B x|| / ((||A|| + |l| ||B||) ||x||)
  double value_tol = 1e-10;     // relative change of eigenvalues per sweep
  int max_iterations = 1000;
  int dense_cutoff = 300;  // below this size use the dense solver
  std::uint64_t seed = 20170401;
};

/// Smallest `count` eigenpairs of the sparse pencil (A, B), both SPD, by block
/// inverse subspace iteration with Rayleigh-Ritz. Block size exceeds `count`
/// so clustered and repeated eigenvalues are resolved.
inline GeneralizedEig sparse_gen_symdef_eig(const SparseMatrix& a, const SparseMatrix& b, int count,
                                            const SubspaceOptions& opt = {}) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.rows() != n || b.cols() != n) throw InvalidArgument("sparse_gen_symdef_eig: dimension mismatch");
  if (count < 1) throw InvalidArgument("sparse_gen_symdef_eig: count must be >= 1");
  if (n <= opt.dense_cutoff) return gen_symdef_eig(RealMatrix(a), RealMatrix(b), count);

  Eigen::SimplicialLLT<SparseMatrix> bchol(b);
  if (bchol.info() != Eigen::Success) throw InvalidArgument("sparse_gen_symdef_eig: B is not positive definite");
  Eigen::SimplicialLDLT<SparseMatrix> afact(a);
  if (afact.info() != Eigen::Success || (afact.vectorD().array() <= 0.0).any())
    throw InvalidArgument("sparse_gen_symdef_eig: A is not positive definite");

  auto norm1 = [](const SparseMatrix& m) {
    double best = 0.0;
    for (Eigen::Index c = 0; c < m.outerSize(); ++c) {
      double s = 0.0;
      for (SparseMatrix::InnerIterator it(m, c); it; ++it) s += std::abs(it.value());
      best = std::max(best, s);
    }
    return best;
  };
  const double anorm = norm1(a);
  const double bnorm = norm1(b);

  const Eigen::Index p = std::min<Eigen::Index>(n, std::max(2 * count, count + 8));
  const Eigen::Index want = std::min<Eigen::Index>(count, p);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  RealMatrix x(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = unif(rng);

  RealVector values;
  RealVector previous;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const RealMatrix y = afact.solve(b * x);
    const RealMatrix ay = a * y;
    const RealMatrix by = b * y;
    RealMatrix ar = y.transpose() * ay;
    RealMatrix br = y.transpose() * by;
    ar = 0.5 * (ar + ar.transpose()).eval();
    br = 0.5 * (br + br.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<RealMatrix> es(ar, br, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) throw SolverFailure("sparse_gen_symdef_eig: Rayleigh-Ritz step failed");
    x = y * es.eigenvectors();
    values = es.eigenvalues();

    bool done = previous.size() == values.size();
    if (done) {
      for (Eigen::Index j = 0; j < want && done; ++j)
        done = std::abs(values(j) - previous(j)) <= opt.value_tol * std::abs(values(j));
    }
    previous = values;
    if (!done) continue;
    const RealMatrix ax = ay * es.eigenvectors();
    const RealMatrix bx = by * es.eigenvectors();
    for (Eigen::Index j = 0; j < want && done; ++j) {
      const double eta = (ax.col(j) - values(j) * bx.col(j)).norm() /
                         ((anorm + std::abs(values(j)) * bnorm) * x.col(j).norm());
      done = eta <= opt.backward_tol;
    }
    if (done) return {values.head(want), x.leftCols(want)};
  }
  throw SolverFailure("sparse_gen_symdef_eig: subspace iteration did not converge");
}

/// Largest singular value.
inline double spectral_norm(const ComplexMatrix& a) {
  if (a.size() == 0) return 0.0;
  const ComplexMatrix g = a.adjoint() * a;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(g, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace artbg
