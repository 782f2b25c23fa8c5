// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The isac-ma Authors

#include "isacma/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace isacma::conic {

using SpMat = Eigen::SparseMatrix<double>;

// ---------------------------------------------------------------- builders

std::size_t AffineMatrix::index(int i, int j) const {
  if (i < j) std::swap(i, j);
  if (i >= order_ || j < 0) throw std::out_of_range("matrix entry out of range");
  // Column-major lower triangle.
  return static_cast<std::size_t>(j * order_ - j * (j - 1) / 2 + (i - j));
}

Affine& AffineMatrix::at(int i, int j) { return entries_[index(i, j)]; }
const Affine& AffineMatrix::at(int i, int j) const { return entries_[index(i, j)]; }

int ConeProgram::add_variables(int count) {
  const int first = n_vars_;
  n_vars_ += count;
  RVec grown = RVec::Zero(n_vars_);
  grown.head(cost_.size()) = cost_;
  cost_ = std::move(grown);
  for (auto& b : blocks_) b.g.conservativeResize(b.dim, n_vars_);
  return first;
}

void ConeProgram::set_cost(int var, double coef) { cost_(var) = coef; }

void ConeProgram::add_cost(const Affine& a) {
  for (const auto& [v, c] : a.terms) cost_(v) += c;
}

void ConeProgram::add_equality(const Affine& lhs_minus_rhs) { eq_rows_.push_back(lhs_minus_rhs); }

void ConeProgram::add_nonnegative(const Affine& expr) { add_block(ConeKind::NonNegative, 1, {expr}); }

void ConeProgram::add_nonnegative(const std::vector<Affine>& exprs) {
  add_block(ConeKind::NonNegative, static_cast<int>(exprs.size()), exprs);
}

void ConeProgram::add_second_order(const std::vector<Affine>& exprs) {
  if (exprs.empty()) throw std::invalid_argument("second-order cone needs at least one entry");
  add_block(ConeKind::SecondOrder, static_cast<int>(exprs.size()), exprs);
}

void ConeProgram::add_semidefinite(const AffineMatrix& m) {
  const int n = m.order();
  std::vector<Affine> rows;
  rows.reserve(static_cast<std::size_t>(n * (n + 1) / 2));
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      Affine a = m.at(i, j);
      if (i != j) a *= std::sqrt(2.0);
      rows.push_back(std::move(a));
    }
  }
  add_block(ConeKind::Semidefinite, n, rows);
}

void ConeProgram::add_block(ConeKind kind, int order, const std::vector<Affine>& rows) {
  Block b{kind, order, static_cast<int>(rows.size()), RVec(static_cast<Eigen::Index>(rows.size())), SpMat()};
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    b.h(static_cast<Eigen::Index>(r)) = rows[r].constant;
    for (const auto& [v, c] : rows[r].terms) {
      if (v < 0 || v >= n_vars_) throw std::out_of_range("affine term references unknown variable");
      trip.emplace_back(static_cast<int>(r), v, -c);  // s = h - G x
    }
  }
  b.g.resize(b.dim, n_vars_);
  b.g.setFromTriplets(trip.begin(), trip.end());
  blocks_.push_back(std::move(b));
}

RMat ConeProgram::equality_matrix() const {
  RMat a = RMat::Zero(static_cast<Eigen::Index>(eq_rows_.size()), n_vars_);
  for (std::size_t r = 0; r < eq_rows_.size(); ++r) {
    for (const auto& [v, c] : eq_rows_[r].terms) a(static_cast<Eigen::Index>(r), v) += c;
  }
  return a;
}

RVec ConeProgram::equality_rhs() const {
  RVec b(static_cast<Eigen::Index>(eq_rows_.size()));
  for (std::size_t r = 0; r < eq_rows_.size(); ++r) b(static_cast<Eigen::Index>(r)) = -eq_rows_[r].constant;
  return b;
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::Stalled: return "stalled";
    case SolveStatus::NumericalError: return "numerical_error";
  }
  return "?";
}

bool SolveResult::usable(double tol) const {
  if (status == SolveStatus::Optimal) return true;
  if (x.size() == 0) return false;
  const double rel = gap / std::max({std::abs(primal_objective), std::abs(dual_objective), 1.0});
  return primal_residual <= tol && dual_residual <= tol && rel <= tol;
}

// ---------------------------------------------------------------- cone algebra

namespace {

RMat smat(const Eigen::Ref<const RVec>& v, int n) {
  RMat m(n, n);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Eigen::Index k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      const double x = i == j ? v(k) : v(k) * inv_sqrt2;
      m(i, j) = x;
      m(j, i) = x;
      ++k;
    }
  }
  return m;
}

RVec svec(const RMat& m) {
  const auto n = static_cast<int>(m.rows());
  RVec v(n * (n + 1) / 2);
  const double sqrt2 = std::sqrt(2.0);
  Eigen::Index k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      v(k++) = i == j ? m(i, j) : sqrt2 * 0.5 * (m(i, j) + m(j, i));
    }
  }
  return v;
}

struct Scaling {
  RVec d;               // nonnegative: W = diag(d)
  RMat w, w_inv;        // second order: symmetric W and its inverse
  RMat r, r_inv;        // semidefinite: W(Z) = R^T Z R
  RVec lambda_eig;      // semidefinite: lambda = diag(lambda_eig)
  RVec lambda;          // scaled point W z = W^{-T} s
};

using Block = ConeProgram::Block;

RVec identity(const Block& b) {
  RVec e = RVec::Zero(b.dim);
  switch (b.kind) {
    case ConeKind::NonNegative: e.setOnes(); break;
    case ConeKind::SecondOrder: e(0) = 1.0; break;
    case ConeKind::Semidefinite: {
      Eigen::Index k = 0;
      for (int j = 0; j < b.order; ++j) {
        e(k) = 1.0;
        k += b.order - j;
      }
      break;
    }
  }
  return e;
}

int degree(const Block& b) { return b.kind == ConeKind::SecondOrder ? 1 : b.order; }

double min_eig(const Block& b, const Eigen::Ref<const RVec>& x) {
  switch (b.kind) {
    case ConeKind::NonNegative: return x.minCoeff();
    case ConeKind::SecondOrder: return x(0) - x.tail(b.dim - 1).norm();
    case ConeKind::Semidefinite: {
      Eigen::SelfAdjointEigenSolver<RMat> eig(smat(x, b.order), Eigen::EigenvaluesOnly);
      return eig.eigenvalues().minCoeff();
    }
  }
  return 0.0;
}

/// Largest alpha with x + alpha d in the cone (x interior); +inf if unbounded.
double max_step(const Block& b, const Eigen::Ref<const RVec>& x, const Eigen::Ref<const RVec>& d) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  switch (b.kind) {
    case ConeKind::NonNegative: {
      double a = kInf;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (d(i) < 0) a = std::min(a, -x(i) / d(i));
      }
      return a;
    }
    case ConeKind::SecondOrder: {
      // Work in the frame where x is the identity: the step is bounded by the
      // smaller Jordan eigenvalue of x^{-1/2} d x^{-1/2}. Use the quadratic form instead.
      const double x0 = x(0), d0 = d(0);
      const auto x1 = x.tail(b.dim - 1);
      const auto d1 = d.tail(b.dim - 1);
      const double qa = d0 * d0 - d1.squaredNorm();
      const double qb = x0 * d0 - x1.dot(d1);
      const double qc = x0 * x0 - x1.squaredNorm();
      if (qc <= 0) return 0.0;
      double a = kInf;
      const double scale = std::max(std::abs(qa), 1e-300);
      if (std::abs(qa) <= 1e-14 * std::max(d0 * d0, 1e-300)) {
        if (qb < 0) a = -qc / (2.0 * qb);
      } else {
        const double disc = qb * qb - qa * qc;
        if (qa > 0) {
          if (qb < 0 && disc >= 0) a = qc / (-qb + std::sqrt(disc));
        } else {
          a = qc / (-qb + std::sqrt(std::max(disc, 0.0)));
        }
      }
      (void)scale;
      if (d0 < 0) a = std::min(a, -x0 / d0);
      return a;
    }
    case ConeKind::Semidefinite: {
      const RMat xm = smat(x, b.order);
      Eigen::LLT<RMat> llt(xm);
      if (llt.info() != Eigen::Success) return 0.0;
      const auto l = llt.matrixL();
      RMat t = l.solve(smat(d, b.order));
      t = l.solve(t.transpose()).transpose();
      Eigen::SelfAdjointEigenSolver<RMat> eig(0.5 * (t + t.transpose()), Eigen::EigenvaluesOnly);
      const double lo = eig.eigenvalues().minCoeff();
      return lo < 0 ? -1.0 / lo : kInf;
    }
  }
  return kInf;
}

RVec jordan(const Block& b, const Eigen::Ref<const RVec>& x, const Eigen::Ref<const RVec>& y) {
  switch (b.kind) {
    case ConeKind::NonNegative: return x.cwiseProduct(y);
    case ConeKind::SecondOrder: {
      RVec out(b.dim);
      out(0) = x.dot(y);
      out.tail(b.dim - 1) = x(0) * y.tail(b.dim - 1) + y(0) * x.tail(b.dim - 1);
      return out;
    }
    case ConeKind::Semidefinite: {
      const RMat xm = smat(x, b.order);
      const RMat ym = smat(y, b.order);
      return svec(0.5 * (xm * ym + ym * xm));
    }
  }
  return {};
}

/// u with lambda o u = v.
RVec jordan_solve(const Block& b, const Scaling& sc, const Eigen::Ref<const RVec>& v) {
  const RVec& l = sc.lambda;
  switch (b.kind) {
    case ConeKind::NonNegative: return v.cwiseQuotient(l);
    case ConeKind::SecondOrder: {
      const auto l1 = l.tail(b.dim - 1);
      const double det = l(0) * l(0) - l1.squaredNorm();
      RVec u(b.dim);
      u(0) = (l(0) * v(0) - l1.dot(v.tail(b.dim - 1))) / det;
      u.tail(b.dim - 1) = (v.tail(b.dim - 1) - u(0) * l1) / l(0);
      return u;
    }
    case ConeKind::Semidefinite: {
      RVec u(b.dim);
      Eigen::Index k = 0;
      for (int j = 0; j < b.order; ++j) {
        for (int i = j; i < b.order; ++i) {
          u(k) = 2.0 * v(k) / (sc.lambda_eig(i) + sc.lambda_eig(j));
          ++k;
        }
      }
      return u;
    }
  }
  return {};
}

bool compute_scaling(const Block& b, const Eigen::Ref<const RVec>& s, const Eigen::Ref<const RVec>& z,
                     Scaling& sc) {
  switch (b.kind) {
    case ConeKind::NonNegative: {
      if ((s.array() <= 0).any() || (z.array() <= 0).any()) return false;
      sc.d = s.cwiseQuotient(z).cwiseSqrt();
      sc.lambda = s.cwiseProduct(z).cwiseSqrt();
      return true;
    }
    case ConeKind::SecondOrder: {
      const int m = b.dim;
      const double sjs = s(0) * s(0) - s.tail(m - 1).squaredNorm();
      const double zjz = z(0) * z(0) - z.tail(m - 1).squaredNorm();
      if (!(sjs > 0) || !(zjz > 0) || s(0) <= 0 || z(0) <= 0) return false;
      const double sn = std::sqrt(sjs), zn = std::sqrt(zjz);
      const RVec sb = s / sn;
      RVec jzb = z / zn;
      const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(jzb)));
      jzb.tail(m - 1) *= -1.0;
      const RVec w = (sb + jzb) / (2.0 * gamma);
      RVec v = w;
      v(0) += 1.0;
      v /= std::sqrt(2.0 * (w(0) + 1.0));
      const double beta = std::sqrt(sn / zn);
      RMat jm = RMat::Identity(m, m);
      jm.bottomRightCorner(m - 1, m - 1) *= -1.0;
      sc.w = beta * (2.0 * v * v.transpose() - jm);
      const RVec jv = jm * v;
      sc.w_inv = (1.0 / beta) * (2.0 * jv * jv.transpose() - jm);
      sc.lambda = sc.w * z;
      return true;
    }
    case ConeKind::Semidefinite: {
      const int n = b.order;
      Eigen::LLT<RMat> ls(smat(s, n));
      Eigen::LLT<RMat> lz(smat(z, n));
      if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
      const RMat l_s = ls.matrixL();
      const RMat l_z = lz.matrixL();
      Eigen::JacobiSVD<RMat> svd(l_z.transpose() * l_s, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const RVec sig = svd.singularValues();
      if (!(sig.minCoeff() > 0)) return false;
      sc.r = l_s * svd.matrixV() * sig.cwiseSqrt().cwiseInverse().asDiagonal();
      // R^{-1} = Sigma^{1/2} V^T L_s^{-1}
      RMat linv = ls.matrixL().solve(RMat::Identity(n, n));
      sc.r_inv = sig.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * linv;
      sc.lambda_eig = sig;
      sc.lambda = svec(RMat(sig.asDiagonal()));
      return true;
    }
  }
  return false;
}

// W v
RVec apply_w(const Block& b, const Scaling& sc, const Eigen::Ref<const RVec>& v) {
  switch (b.kind) {
    case ConeKind::NonNegative: return sc.d.cwiseProduct(v);
    case ConeKind::SecondOrder: return sc.w * v;
    case ConeKind::Semidefinite: return svec(sc.r.transpose() * smat(v, b.order) * sc.r);
  }
  return {};
}

// W^T v
RVec apply_wt(const Block& b, const Scaling& sc, const Eigen::Ref<const RVec>& v) {
  switch (b.kind) {
    case ConeKind::NonNegative: return sc.d.cwiseProduct(v);
    case ConeKind::SecondOrder: return sc.w * v;
    case ConeKind::Semidefinite: return svec(sc.r * smat(v, b.order) * sc.r.transpose());
  }
  return {};
}

// W^{-T} v
RVec apply_winv_t(const Block& b, const Scaling& sc, const Eigen::Ref<const RVec>& v) {
  switch (b.kind) {
    case ConeKind::NonNegative: return v.cwiseQuotient(sc.d);
    case ConeKind::SecondOrder: return sc.w_inv * v;
    case ConeKind::Semidefinite: return svec(sc.r_inv * smat(v, b.order) * sc.r_inv.transpose());
  }
  return {};
}

/// Dense (W^T W)^{-1} for a second-order or semidefinite block.
RMat inverse_gram(const Block& b, const Scaling& sc) {
  if (b.kind == ConeKind::SecondOrder) return sc.w_inv * sc.w_inv;
  const int n = b.order;
  const RMat v = sc.r_inv.transpose() * sc.r_inv;
  RMat m(b.dim, b.dim);
  const double sqrt2 = std::sqrt(2.0);
  std::vector<std::pair<int, int>> idx;
  idx.reserve(static_cast<std::size_t>(b.dim));
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) idx.emplace_back(i, j);
  }
  for (int c = 0; c < b.dim; ++c) {
    const auto [k, l] = idx[static_cast<std::size_t>(c)];
    const double ckl = k == l ? 1.0 : sqrt2;
    for (int r = c; r < b.dim; ++r) {
      const auto [i, j] = idx[static_cast<std::size_t>(r)];
      const double cij = i == j ? 1.0 : sqrt2;
      double val = v(i, k) * v(l, j);
      if (k != l) val += v(i, l) * v(k, j);
      val *= cij / ckl;
      m(r, c) = val;
      m(c, r) = val;
    }
  }
  return m;
}

// Applies (W^T W)^{-1} to a block vector.
RVec apply_inverse_gram(const Block& b, const Scaling& sc, const Eigen::Ref<const RVec>& v) {
  switch (b.kind) {
    case ConeKind::NonNegative: return v.cwiseQuotient(sc.d.cwiseAbs2());
    case ConeKind::SecondOrder: return sc.w_inv * (sc.w_inv * v);
    case ConeKind::Semidefinite: {
      const RMat vv = sc.r_inv.transpose() * sc.r_inv;
      return svec(vv * smat(v, b.order) * vv);
    }
  }
  return {};
}

struct Layout {
  std::vector<Eigen::Index> offset;
  Eigen::Index total = 0;
  int degree = 0;
};

Layout layout(const ConeProgram& p) {
  Layout l;
  for (const auto& b : p.blocks()) {
    l.offset.push_back(l.total);
    l.total += b.dim;
    l.degree += degree(b);
  }
  return l;
}

// G x stacked over blocks
RVec g_times(const ConeProgram& p, const Layout& l, const RVec& x) {
  RVec out(l.total);
  for (std::size_t k = 0; k < p.blocks().size(); ++k) {
    const auto& b = p.blocks()[k];
    out.segment(l.offset[k], b.dim) = b.g * x;
  }
  return out;
}

// G^T z
RVec gt_times(const ConeProgram& p, const Layout& l, const RVec& z) {
  RVec out = RVec::Zero(p.n_vars());
  for (std::size_t k = 0; k < p.blocks().size(); ++k) {
    const auto& b = p.blocks()[k];
    out += b.g.transpose() * z.segment(l.offset[k], b.dim);
  }
  return out;
}

class KktSystem {
 public:
  KktSystem(const RMat& h, const RMat& a) : n_(h.rows()), p_(a.rows()) {
    k_.resize(n_ + p_, n_ + p_);
    k_.setZero();
    k_.topLeftCorner(n_, n_) = h;
    k_.topRightCorner(n_, p_) = a.transpose();
    k_.bottomLeftCorner(p_, n_) = a;
    RMat reg = k_;
    const double delta = 1e-13 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    reg.topLeftCorner(n_, n_).diagonal().array() += delta;
    reg.bottomRightCorner(p_, p_).diagonal().array() -= delta;
    lu_.compute(reg);
  }

  RVec solve(const RVec& rhs) const {
    RVec x = lu_.solve(rhs);
    const RVec r = rhs - k_ * x;
    x += lu_.solve(r);
    return x;
  }

 private:
  Eigen::Index n_, p_;
  RMat k_;
  Eigen::PartialPivLU<RMat> lu_;
};

RMat assemble_h(const ConeProgram& p, const std::vector<Scaling>* sc) {
  const int n = p.n_vars();
  RMat h = RMat::Zero(n, n);
  for (std::size_t k = 0; k < p.blocks().size(); ++k) {
    const auto& b = p.blocks()[k];
    if (sc == nullptr) {
      h += RMat(b.g.transpose() * b.g);
      continue;
    }
    const Scaling& s = (*sc)[k];
    if (b.kind == ConeKind::NonNegative) {
      const RVec wts = s.d.cwiseAbs2().cwiseInverse();
      h += RMat(b.g.transpose() * wts.asDiagonal() * b.g);
    } else {
      const RMat m = inverse_gram(b, s);
      const RMat mg = m * b.g;
      h += RMat(b.g.transpose() * mg);
    }
  }
  return h;
}

}  // namespace

SolveResult solve(const ConeProgram& program, const SolverOptions& options) {
  const int n = program.n_vars();
  const Layout lay = layout(program);
  const auto& blocks = program.blocks();
  const RMat a = program.equality_matrix();
  const RVec bvec = program.equality_rhs();
  const RVec& c = program.cost();
  const Eigen::Index p = a.rows();

  RVec h(lay.total);
  for (std::size_t k = 0; k < blocks.size(); ++k) h.segment(lay.offset[k], blocks[k].dim) = blocks[k].h;

  SolveResult res;
  auto seg = [&](RVec& v, std::size_t k) { return v.segment(lay.offset[k], blocks[k].dim); };
  auto cseg = [&](const RVec& v, std::size_t k) { return v.segment(lay.offset[k], blocks[k].dim); };

  // Starting point from the two least-squares problems with W = I.
  RVec x, y, s, z;
  {
    KktSystem kkt(assemble_h(program, nullptr), a);
    RVec rhs(n + p);
    rhs.head(n) = gt_times(program, lay, h);
    rhs.tail(p) = bvec;
    const RVec sol = kkt.solve(rhs);
    x = sol.head(n);
    s = h - g_times(program, lay, x);
    rhs.head(n) = c;
    rhs.tail(p).setZero();
    const RVec dual = kkt.solve(rhs);
    y = -dual.tail(p);
    z = -g_times(program, lay, RVec(dual.head(n)));
    auto shift = [&](RVec& v) {
      double t = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < blocks.size(); ++k) t = std::max(t, -min_eig(blocks[k], cseg(v, k)));
      if (blocks.empty()) return;
      if (t >= -1e-8 * std::max(v.norm(), 1.0)) {
        for (std::size_t k = 0; k < blocks.size(); ++k) seg(v, k) += (1.0 + t) * identity(blocks[k]);
      }
    };
    shift(s);
    shift(z);
  }

  const double resx0 = std::max(1.0, c.norm());
  const double resy0 = std::max(1.0, bvec.norm());
  const double resz0 = std::max(1.0, h.norm());
  std::vector<Scaling> scal(blocks.size());
  int small_steps = 0;
  SolveResult best;
  double best_merit = std::numeric_limits<double>::infinity();
  auto finish = [&](SolveStatus status) {
    SolveResult out = std::isfinite(best_merit) ? best : res;
    out.status = status;
    out.iterations = res.iterations;
    return out;
  };

  for (int iter = 0; iter <= options.max_iters; ++iter) {
    const RVec rx = c + a.transpose() * y + gt_times(program, lay, z);
    const RVec ry = a * x - bvec;
    const RVec rz = g_times(program, lay, x) + s - h;
    const double gap = s.dot(z);
    const double pcost = c.dot(x);
    const double dcost = -bvec.dot(y) - h.dot(z);
    const double pres = std::max(ry.norm() / resy0, rz.norm() / resz0);
    const double dres = rx.norm() / resx0;
    double relgap = std::numeric_limits<double>::infinity();
    if (pcost < 0) relgap = gap / -pcost;
    else if (dcost > 0) relgap = gap / dcost;

    res.x = x; res.y = y; res.s = s; res.z = z;
    res.primal_objective = pcost;
    res.dual_objective = dcost;
    res.gap = gap;
    res.primal_residual = pres;
    res.dual_residual = dres;
    res.iterations = iter;

    if (pres <= options.feastol && dres <= options.feastol &&
        (gap <= options.abstol || relgap <= options.reltol)) {
      res.status = SolveStatus::Optimal;
      return res;
    }
    // Near the optimum rounding can undo progress; remember the best point seen.
    const double merit = std::max({pres, dres, std::min(gap, relgap)});
    if (merit < best_merit) {
      best_merit = merit;
      best = res;
    }
    if (iter == options.max_iters) return finish(SolveStatus::MaxIterations);

    for (std::size_t k = 0; k < blocks.size(); ++k) {
      if (!compute_scaling(blocks[k], cseg(s, k), cseg(z, k), scal[k])) return finish(SolveStatus::NumericalError);
    }
    const double mu = lay.degree > 0 ? gap / lay.degree : 0.0;
    const KktSystem kkt(assemble_h(program, &scal), a);
    if (!kkt.solve(RVec::Zero(n + p)).allFinite()) return finish(SolveStatus::NumericalError);

    // Solves  A^T dy + G^T dz = bx,  A dx = by,  G dx + ds = bz,  ds + W^T W dz = bc
    // by block elimination, then refines against the unreduced equations.
    auto linear_solve = [&](const RVec& bx, const RVec& by, const RVec& bz, const RVec& bc, RVec& dx,
                            RVec& dy, RVec& dz, RVec& ds) {
      auto reduced = [&](const RVec& ex, const RVec& ey, const RVec& ez, const RVec& ec, RVec& ux, RVec& uy,
                         RVec& uz, RVec& us) {
        RVec t(lay.total);
        for (std::size_t k = 0; k < blocks.size(); ++k) {
          seg(t, k) = apply_inverse_gram(blocks[k], scal[k], RVec(cseg(ec, k) - cseg(ez, k)));
        }
        RVec rhs(n + p);
        rhs.head(n) = ex - gt_times(program, lay, t);
        rhs.tail(p) = ey;
        const RVec sol = kkt.solve(rhs);
        ux = sol.head(n);
        uy = sol.tail(p);
        const RVec gux = g_times(program, lay, ux);
        uz.resize(lay.total);
        for (std::size_t k = 0; k < blocks.size(); ++k) {
          seg(uz, k) = apply_inverse_gram(blocks[k], scal[k], RVec(cseg(gux, k) + cseg(ec, k) - cseg(ez, k)));
        }
        us = ez - gux;
      };
      reduced(bx, by, bz, bc, dx, dy, dz, ds);
      for (int round = 0; round < 3; ++round) {
        const RVec ex = bx - a.transpose() * dy - gt_times(program, lay, dz);
        const RVec ey = by - a * dx;
        const RVec ez = bz - g_times(program, lay, dx) - ds;
        RVec ec(lay.total);
        for (std::size_t k = 0; k < blocks.size(); ++k) {
          seg(ec, k) = cseg(bc, k) - cseg(ds, k) -
                       apply_wt(blocks[k], scal[k], apply_w(blocks[k], scal[k], cseg(dz, k)));
        }
        RVec cx, cy, cz, cs;
        reduced(ex, ey, ez, ec, cx, cy, cz, cs);
        dx += cx;
        dy += cy;
        dz += cz;
        ds += cs;
      }
    };

    // Newton direction for the complementarity target r_c (block-wise).
    auto newton = [&](const RVec& rc, RVec& dx, RVec& dy, RVec& dz, RVec& ds) {
      RVec bc(lay.total);
      for (std::size_t k = 0; k < blocks.size(); ++k) {
        seg(bc, k) = apply_wt(blocks[k], scal[k], jordan_solve(blocks[k], scal[k], cseg(rc, k)));
      }
      linear_solve(-rx, -ry, -rz, bc, dx, dy, dz, ds);
    };

    auto step_to_boundary = [&](const RVec& ds, const RVec& dz) {
      double alpha = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < blocks.size(); ++k) {
        alpha = std::min(alpha, max_step(blocks[k], cseg(s, k), cseg(ds, k)));
        alpha = std::min(alpha, max_step(blocks[k], cseg(z, k), cseg(dz, k)));
      }
      return alpha;
    };

    RVec lam(lay.total), lamsq(lay.total), ident(lay.total);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      seg(lam, k) = scal[k].lambda;
      seg(lamsq, k) = jordan(blocks[k], scal[k].lambda, scal[k].lambda);
      seg(ident, k) = identity(blocks[k]);
    }

    RVec dxa, dya, dza, dsa;
    newton(-lamsq, dxa, dya, dza, dsa);
    const double alpha_aff = std::min(1.0, step_to_boundary(dsa, dza));
    double sigma = 0.0;
    if (gap > 0) {
      const double gap_aff = (s + alpha_aff * dsa).dot(z + alpha_aff * dza);
      sigma = std::clamp(std::pow(std::max(gap_aff, 0.0) / gap, 3.0), 0.0, 1.0);
    }

    RVec rc(lay.total);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const RVec dst = apply_winv_t(blocks[k], scal[k], cseg(dsa, k));
      const RVec dzt = apply_w(blocks[k], scal[k], cseg(dza, k));
      seg(rc, k) = -cseg(lamsq, k) - jordan(blocks[k], dst, dzt) + sigma * mu * cseg(ident, k);
    }
    RVec dx, dy, dz, ds;
    newton(rc, dx, dy, dz, ds);
    if (!dx.allFinite() || !dz.allFinite()) return finish(SolveStatus::NumericalError);
    const double alpha = std::min(1.0, 0.99 * step_to_boundary(ds, dz));
    x += alpha * dx;
    y += alpha * dy;
    s += alpha * ds;
    z += alpha * dz;
    small_steps = alpha < 1e-8 ? small_steps + 1 : 0;
    if (small_steps >= 3) return finish(SolveStatus::Stalled);
  }
  return finish(SolveStatus::MaxIterations);
}

}  // namespace isacma::conic
