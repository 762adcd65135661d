#pragma once

#include "broadcf/errors.hpp"
#include "broadcf/rng.hpp"
#include "broadcf/types.hpp"

#include <Eigen/Cholesky>

#include <cstdint>
#include <string>

namespace broadcf {

struct BlsHyperparams {
  int n = 25;          // mapped feature groups
  int d_z = 10;        // mapped group dimension
  int m = 25;          // enhanced feature groups
  int d_h = 15;        // enhanced group dimension
  double lambda = 1e-8; // ridge regularization
  std::uint64_t seed = 1;

  void validate() const {
    if (n < 1 || d_z < 1 || m < 1 || d_h < 1)
      throw_config("BLS group counts and dimensions must be >= 1");
    if (!(lambda >= 0.0)) throw_config("lambda must be >= 0");
  }
};

// Random feature layers plus the trained output weights. Group j of the
// mapped layer is W_z.middleCols(j*d_z, d_z) with bias row
// beta_z.segment(j*d_z, d_z); the enhanced layer is laid out the same way.
// Random weights are fixed at construction and never updated; only W is
// learned.
template <class Scalar>
struct BlsModel {
  BlsHyperparams hyper;
  int input_dim = 0;
  int d_y = 0;

  MatrixX<Scalar> W_z;       // input_dim x (n*d_z)
  RowVectorX<Scalar> beta_z; // n*d_z
  MatrixX<Scalar> W_h;       // (n*d_z) x (m*d_h)
  RowVectorX<Scalar> beta_h; // m*d_h
  MatrixX<Scalar> W;         // (n*d_z + m*d_h) x d_y
  bool trained = false;

  int mapped_dim() const { return hyper.n * hyper.d_z; }
  int enhanced_dim() const { return hyper.m * hyper.d_h; }
  int feature_dim() const { return mapped_dim() + enhanced_dim(); }

  auto w_z_group(int j) const { return W_z.middleCols(j * hyper.d_z, hyper.d_z); }
  auto beta_z_group(int j) const { return beta_z.segment(j * hyper.d_z, hyper.d_z); }
  auto w_h_group(int j) const { return W_h.middleCols(j * hyper.d_h, hyper.d_h); }
  auto beta_h_group(int j) const { return beta_h.segment(j * hyper.d_h, hyper.d_h); }
};

template <class Scalar>
std::int64_t count_trainable(const BlsModel<Scalar>& model) {
  return static_cast<std::int64_t>(model.feature_dim()) * model.d_y;
}

// Draws every random weight i.i.d. uniform on [-1, 1] from one seeded
// generator, group by group, each group matrix filled row-major and followed
// by its bias row. W starts zeroed. A fixed seed reproduces the exact bits.
template <class Scalar>
BlsModel<Scalar> init_random(const BlsHyperparams& hyper, int input_dim, int d_y) {
  hyper.validate();
  if (input_dim < 1) throw_config("input_dim must be >= 1");
  if (d_y < 2) throw_config("d_y must be >= 2");

  BlsModel<Scalar> model;
  model.hyper = hyper;
  model.input_dim = input_dim;
  model.d_y = d_y;
  model.W_z.resize(input_dim, model.mapped_dim());
  model.beta_z.resize(model.mapped_dim());
  model.W_h.resize(model.mapped_dim(), model.enhanced_dim());
  model.beta_h.resize(model.enhanced_dim());
  model.W = MatrixX<Scalar>::Zero(model.feature_dim(), d_y);

  std::mt19937_64 rng(hyper.seed);
  auto draw = [&rng] { return static_cast<Scalar>(uniform_symmetric(rng)); };
  for (int j = 0; j < hyper.n; ++j) {
    auto block = model.W_z.middleCols(j * hyper.d_z, hyper.d_z);
    for (Eigen::Index r = 0; r < block.rows(); ++r)
      for (Eigen::Index c = 0; c < block.cols(); ++c) block(r, c) = draw();
    for (int c = 0; c < hyper.d_z; ++c) model.beta_z[j * hyper.d_z + c] = draw();
  }
  for (int j = 0; j < hyper.m; ++j) {
    auto block = model.W_h.middleCols(j * hyper.d_h, hyper.d_h);
    for (Eigen::Index r = 0; r < block.rows(); ++r)
      for (Eigen::Index c = 0; c < block.cols(); ++c) block(r, c) = draw();
    for (int c = 0; c < hyper.d_h; ++c) model.beta_h[j * hyper.d_h + c] = draw();
  }
  return model;
}

// Z = relu(X * W_z + beta_z), all n groups at once.
template <class Scalar>
MatrixX<Scalar> mapped_features(const BlsModel<Scalar>& model, const MatrixX<Scalar>& X) {
  if (X.cols() != model.input_dim)
    throw_contract("mapped_features: X has " + std::to_string(X.cols()) +
                   " columns, model expects " + std::to_string(model.input_dim));
  return ((X * model.W_z).rowwise() + model.beta_z).cwiseMax(Scalar(0));
}

// H = relu(Z * W_h + beta_h), all m groups at once.
template <class Scalar>
MatrixX<Scalar> enhanced_features(const BlsModel<Scalar>& model, const MatrixX<Scalar>& Z) {
  if (Z.cols() != model.mapped_dim())
    throw_contract("enhanced_features: Z has " + std::to_string(Z.cols()) +
                   " columns, model expects " + std::to_string(model.mapped_dim()));
  return ((Z * model.W_h).rowwise() + model.beta_h).cwiseMax(Scalar(0));
}

namespace detail {

// Solves (G + lambda I) W = B for symmetric PSD G given as its lower
// triangle. With lambda = 0 a rank-deficient pivot sequence is reported as a
// singular system.
template <class Scalar>
MatrixX<Scalar> solve_shifted_normal_equations(MatrixX<Scalar>& G,
                                               const MatrixX<Scalar>& B,
                                               double lambda) {
  G.diagonal().array() += static_cast<Scalar>(lambda);
  Eigen::LDLT<MatrixX<Scalar>> ldlt(G.template selfadjointView<Eigen::Lower>());
  if (lambda == 0.0) {
    const VectorX<Scalar> d = ldlt.vectorD();
    const Scalar d_max = d.cwiseAbs().maxCoeff();
    const Scalar d_min = d.cwiseAbs().minCoeff();
    const Scalar rank_tol = Scalar(500) * Eigen::NumTraits<Scalar>::epsilon();
    if (ldlt.info() != Eigen::Success || !(d_max > Scalar(0)) || d_min < d_max * rank_tol)
      throw_numeric("singular normal equations with lambda = 0; set lambda > 0");
  } else if (ldlt.info() != Eigen::Success) {
    throw_numeric("LDLT factorization failed (lambda = " + std::to_string(lambda) + ")");
  }
  MatrixX<Scalar> W = ldlt.solve(B);
  if (!W.allFinite()) throw_numeric("ridge solve produced non-finite weights");
  return W;
}

} // namespace detail

// W = (A'A + lambda I)^-1 A'Y via a symmetric LDLT solve.
template <class Scalar>
MatrixX<Scalar> ridge_solve(const MatrixX<Scalar>& A, const MatrixX<Scalar>& Y,
                            double lambda) {
  if (A.rows() != Y.rows() || A.rows() < 1)
    throw_contract("ridge_solve: A and Y must have the same positive row count");
  if (!(lambda >= 0.0)) throw_config("lambda must be >= 0");
  MatrixX<Scalar> G = MatrixX<Scalar>::Zero(A.cols(), A.cols());
  G.template selfadjointView<Eigen::Lower>().rankUpdate(A.adjoint());
  MatrixX<Scalar> B = A.adjoint() * Y;
  return detail::solve_shifted_normal_equations(G, B, lambda);
}

// Ridge solve of [Z|H] W = Y. The Gram matrix is assembled blockwise so the
// concatenated feature matrix is never materialized.
template <class Scalar>
void train(BlsModel<Scalar>& model, const MatrixX<Scalar>& X, const MatrixX<Scalar>& Y) {
  if (X.rows() != Y.rows() || X.rows() < 1)
    throw_contract("train: X and Y must have the same positive row count");
  if (Y.cols() != model.d_y)
    throw_contract("train: Y has " + std::to_string(Y.cols()) + " columns, model expects " +
                   std::to_string(model.d_y));

  const Eigen::Index pz = model.mapped_dim();
  const Eigen::Index ph = model.enhanced_dim();
  const Eigen::Index p = pz + ph;

  MatrixX<Scalar> G = MatrixX<Scalar>::Zero(p, p);
  MatrixX<Scalar> B(p, Y.cols());
  {
    MatrixX<Scalar> Z = mapped_features(model, X);
    MatrixX<Scalar> H = enhanced_features(model, Z);
    G.topLeftCorner(pz, pz).template selfadjointView<Eigen::Lower>().rankUpdate(Z.adjoint());
    G.bottomLeftCorner(ph, pz).noalias() = H.adjoint() * Z;
    B.topRows(pz).noalias() = Z.adjoint() * Y;
    Z.resize(0, 0);
    G.bottomRightCorner(ph, ph).template selfadjointView<Eigen::Lower>().rankUpdate(H.adjoint());
    B.bottomRows(ph).noalias() = H.adjoint() * Y;
  }
  model.W = detail::solve_shifted_normal_equations(G, B, model.hyper.lambda);
  model.trained = true;
}

// Rating strength vector for one collaborative vector.
template <class Scalar>
RowVectorX<Scalar> forward(const BlsModel<Scalar>& model, const RowVectorX<Scalar>& x) {
  if (!model.trained) throw_state("forward: model is untrained");
  if (x.cols() != model.input_dim)
    throw_contract("forward: input has wrong length");
  RowVectorX<Scalar> z = ((x * model.W_z) + model.beta_z).cwiseMax(Scalar(0));
  RowVectorX<Scalar> h = ((z * model.W_h) + model.beta_h).cwiseMax(Scalar(0));
  RowVectorX<Scalar> a(model.feature_dim());
  a << z, h;
  return a * model.W;
}

// Row-by-row forward, so a batch equals the stack of single-row calls
// exactly.
template <class Scalar>
MatrixX<Scalar> forward_batch(const BlsModel<Scalar>& model, const MatrixX<Scalar>& X) {
  MatrixX<Scalar> out(X.rows(), model.d_y);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    RowVectorX<Scalar> x = X.row(r);
    out.row(r) = forward(model, x);
  }
  return out;
}

} // namespace broadcf
