// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Sparse>

#include "isacma/types.hpp"

namespace isacma::conic {

/// sum_k coef_k * x[var_k] + constant
struct Affine {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;

  Affine() = default;
  Affine(double c) : constant(c) {}  // NOLINT(google-explicit-constructor)
  static Affine var(int index, double coef = 1.0) {
    Affine a;
    a.terms.emplace_back(index, coef);
    return a;
  }
  Affine& add(int index, double coef) {
    if (coef != 0.0) terms.emplace_back(index, coef);
    return *this;
  }
  Affine& operator+=(const Affine& o) {
    constant += o.constant;
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
  }
  Affine& operator*=(double k) {
    constant *= k;
    for (auto& t : terms) t.second *= k;
    return *this;
  }
};

inline Affine operator+(Affine a, const Affine& b) { return a += b; }
inline Affine operator*(double k, Affine a) { return a *= k; }
inline Affine operator-(Affine a, const Affine& b) { return a += -1.0 * b; }

enum class ConeKind { NonNegative, SecondOrder, Semidefinite };

/// Symmetric matrix whose lower-triangle entries are affine in the variables.
class AffineMatrix {
 public:
  explicit AffineMatrix(int order) : order_(order), entries_(static_cast<std::size_t>(order * (order + 1) / 2)) {}
  int order() const { return order_; }
  /// Entry (i, j) and its mirror; i and j may be given in either order.
  Affine& at(int i, int j);
  const Affine& at(int i, int j) const;

 private:
  std::size_t index(int i, int j) const;
  int order_;
  std::vector<Affine> entries_;
};

/// minimize c^T x  s.t.  A x = b,  s = h - G x in K,
/// K a product of nonnegative orthants, second-order and PSD cones.
/// PSD blocks are stored in svec form (lower triangle, off-diagonals scaled by sqrt 2).
class ConeProgram {
 public:
  struct Block {
    ConeKind kind;
    int order;  ///< PSD matrix order; vector length otherwise
    int dim;    ///< length in the stacked slack vector
    RVec h;
    Eigen::SparseMatrix<double> g;  ///< dim x n_vars
  };

  int add_variables(int count);
  int n_vars() const { return n_vars_; }

  void set_cost(int var, double coef);
  void add_cost(const Affine& a);  ///< constant part ignored

  void add_equality(const Affine& lhs_minus_rhs);
  void add_nonnegative(const Affine& expr);
  void add_nonnegative(const std::vector<Affine>& exprs);
  /// exprs[0] >= || exprs[1..] ||
  void add_second_order(const std::vector<Affine>& exprs);
  void add_semidefinite(const AffineMatrix& m);

  const std::vector<Block>& blocks() const { return blocks_; }
  const RVec& cost() const { return cost_; }
  RMat equality_matrix() const;
  RVec equality_rhs() const;
  int n_equalities() const { return static_cast<int>(eq_rows_.size()); }

 private:
  void add_block(ConeKind kind, int order, const std::vector<Affine>& rows);

  int n_vars_ = 0;
  RVec cost_;
  std::vector<Affine> eq_rows_;
  std::vector<Block> blocks_;
};

struct SolverOptions {
  double feastol = 1e-8;
  double abstol = 1e-9;
  double reltol = 1e-9;
  int max_iters = 100;
};

enum class SolveStatus { Optimal, MaxIterations, Stalled, NumericalError };
std::string_view to_string(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalError;
  RVec x, y, s, z;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;

  /// Optimal, or stopped early with residuals and relative gap below `tol`.
  /// On early stops the best iterate seen is reported, not the last one.
  bool usable(double tol = 1e-6) const;
};

/// Infeasible-start primal-dual path-following method with Nesterov-Todd
/// scaling and a Mehrotra predictor-corrector step.
SolveResult solve(const ConeProgram& program, const SolverOptions& options = {});

}  // namespace isacma::conic
