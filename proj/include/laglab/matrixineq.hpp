#pragma once
// Algebraic engine for the symmetric-matrix commutator inequality
//   sum_{a,b} N([A_a, A_b]) + sum_{a,b} S_ab^2 <= (3/2) (sum_a S_a)^2,
// with N(A) = trace(A^T A) and S_ab = trace(A_a A_b): evaluation of both
// sides, seeded random sampling, a random-restart hill-climb toward the
// equality locus, and extraction of matrix slices from geometric B tensors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "laglab/geometry.hpp"

namespace laglab {

// ---------------------------------------------------------------------------
// Families of symmetric matrices
// ---------------------------------------------------------------------------

struct MatrixFamily {
  int p = 0;    // number of matrices, >= 2
  int dim = 0;  // matrix size
  std::vector<Matrix<double>> A;
};

namespace detail {

inline constexpr double kSymmetryTol = 1e-14;

inline void validate_family(const MatrixFamily& fam) {
  if (fam.p < 2) throw InvalidInputError("matrix family needs p >= 2");
  if (fam.dim < 1) throw InvalidInputError("matrix family needs dim >= 1");
  if (static_cast<int>(fam.A.size()) != fam.p)
    throw InvalidInputError("matrix family size does not match p");
  for (int a = 0; a < fam.p; ++a) {
    const Matrix<double>& M = fam.A[static_cast<std::size_t>(a)];
    if (M.rows != fam.dim || M.cols != fam.dim)
      throw InvalidInputError("matrix family entries must be dim x dim");
    for (int i = 0; i < fam.dim; ++i)
      for (int j = 0; j < i; ++j)
        if (std::abs(M(i, j) - M(j, i)) > kSymmetryTol) {
          std::ostringstream os;
          os << "matrix " << a << " is not symmetric: |A(" << i << "," << j
             << ") - A(" << j << "," << i << ")| = "
             << std::abs(M(i, j) - M(j, i));
          throw InvalidInputError(os.str());
        }
    for (double v : M.a)
      if (!std::isfinite(v))
        throw InvalidInputError("matrix family entries must be finite");
  }
}

inline double trace_product(const Matrix<double>& X, const Matrix<double>& Y) {
  double s = 0.0;
  for (int i = 0; i < X.rows; ++i)
    for (int j = 0; j < X.cols; ++j) s += X(i, j) * Y(j, i);
  return s;
}

// N([X, Y]) = trace of the squared commutator norm, computed entrywise.
inline double commutator_norm2(const Matrix<double>& X,
                               const Matrix<double>& Y) {
  const int d = X.rows;
  double s = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double c = 0.0;
      for (int k = 0; k < d; ++k)
        c += X(i, k) * Y(k, j) - Y(i, k) * X(k, j);
      s += c * c;
    }
  return s;
}

// Uniform double in [0, 1) from the raw 64-bit stream (deterministic and
// platform-stable, unlike std::uniform_real_distribution).
inline double unit_sample(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// The inequality
// ---------------------------------------------------------------------------

struct LiLiGap {
  double commutator_sum = 0.0;  // sum over all ordered pairs of N([A_a, A_b])
  double s2_sum = 0.0;          // sum over all ordered pairs of S_ab^2
  double rhs = 0.0;             // (3/2) (sum_a S_a)^2
  double gap = 0.0;             // rhs - commutator_sum - s2_sum, >= 0
};

// Evaluates both sides.  Both (a,b) and (b,a) terms are counted, including
// the diagonal: the equality case (the antisymmetric 2x2 pair) confirms this
// unrestricted reading of the double sums.
inline LiLiGap li_li_gap(const MatrixFamily& fam) {
  detail::validate_family(fam);
  LiLiGap out;
  double trace_sum = 0.0;
  for (int a = 0; a < fam.p; ++a) {
    trace_sum += detail::trace_product(fam.A[a], fam.A[a]);
    for (int b = 0; b < fam.p; ++b) {
      const double s_ab = detail::trace_product(fam.A[a], fam.A[b]);
      out.s2_sum += s_ab * s_ab;
      if (a != b)
        out.commutator_sum += detail::commutator_norm2(fam.A[a], fam.A[b]);
    }
  }
  out.rhs = 1.5 * trace_sum * trace_sum;
  out.gap = out.rhs - out.commutator_sum - out.s2_sum;
  return out;
}

// ---------------------------------------------------------------------------
// Random families and the equality search
// ---------------------------------------------------------------------------

// Deterministic family of p symmetric dim x dim matrices with entries drawn
// from a symmetric distribution and Frobenius norm capped at `scale`.
inline MatrixFamily random_family(int p, int dim, std::uint64_t seed,
                                  double scale) {
  if (p < 2) throw InvalidInputError("random_family needs p >= 2");
  if (dim < 1) throw InvalidInputError("random_family needs dim >= 1");
  if (!(scale >= 0.0) || !std::isfinite(scale))
    throw InvalidInputError("random_family needs a finite scale >= 0");
  std::mt19937_64 g(seed);
  MatrixFamily fam;
  fam.p = p;
  fam.dim = dim;
  fam.A.reserve(static_cast<std::size_t>(p));
  for (int a = 0; a < p; ++a) {
    Matrix<double> M(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) {
        const double v = 2.0 * detail::unit_sample(g) - 1.0;
        M(i, j) = v;
        M(j, i) = v;
      }
    double frob = 0.0;
    for (double v : M.a) frob += v * v;
    frob = std::sqrt(frob);
    if (frob > scale) {
      const double r = scale > 0.0 ? scale / frob : 0.0;
      for (double& v : M.a) v *= r;
    }
    fam.A.push_back(std::move(M));
  }
  return fam;
}

struct GapSearchResult {
  MatrixFamily family;
  double gap = 0.0;
  double rhs = 0.0;
  // Best gap/rhs seen after each completed restart (non-increasing).
  std::vector<double> best_after_restart;
};

// Random-restart hill-climb on gap/rhs.  Each restart draws a fresh seeded
// family and perturbs every matrix entrywise with a multiplicatively decaying
// step, keeping only improvements.  `iterations` counts candidate
// evaluations in total; iterations = 1 evaluates just the seed family.
inline GapSearchResult minimize_gap(int p, int dim, std::uint64_t seed,
                                    int iterations) {
  if (iterations < 1) throw InvalidInputError("minimize_gap needs iterations >= 1");
  constexpr int kRestarts = 8;
  constexpr double kSigma0 = 0.3;
  constexpr double kDecay = 0.995;

  const auto ratio_of = [](const LiLiGap& g) {
    return g.rhs > 1e-300 ? g.gap / g.rhs
                          : std::numeric_limits<double>::infinity();
  };

  GapSearchResult best;
  double best_ratio = std::numeric_limits<double>::infinity();
  long long remaining = iterations;
  const long long per_restart = (iterations + kRestarts - 1) / kRestarts;

  for (int r = 0; r < kRestarts && remaining > 0; ++r) {
    MatrixFamily cur = random_family(p, dim, seed + static_cast<std::uint64_t>(r), 1.0);
    LiLiGap cur_gap = li_li_gap(cur);
    --remaining;
    if (ratio_of(cur_gap) < best_ratio) {
      best_ratio = ratio_of(cur_gap);
      best.family = cur;
      best.gap = cur_gap.gap;
      best.rhs = cur_gap.rhs;
    }

    std::mt19937_64 g(seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(r));
    double sigma = kSigma0;
    double cur_ratio = ratio_of(cur_gap);
    for (long long it = 1; it < per_restart && remaining > 0; ++it) {
      MatrixFamily prop = cur;
      for (auto& M : prop.A)
        for (int i = 0; i < dim; ++i)
          for (int j = i; j < dim; ++j) {
            const double dv = sigma * (2.0 * detail::unit_sample(g) - 1.0);
            M(i, j) += dv;
            if (j != i) M(j, i) += dv;
          }
      LiLiGap pg = li_li_gap(prop);
      --remaining;
      if (pg.rhs > 1e-12 && ratio_of(pg) < cur_ratio) {
        cur = std::move(prop);
        cur_ratio = ratio_of(pg);
        if (cur_ratio < best_ratio) {
          best_ratio = cur_ratio;
          best.family = cur;
          best.gap = pg.gap;
          best.rhs = pg.rhs;
        }
      }
      sigma *= kDecay;
    }
    best.best_after_restart.push_back(best_ratio);
  }

  if (best.gap < -1e-10 * best.rhs)
    throw NumericalError(
        "matrix inequality violated by an optimized family: implementation "
        "bug");
  return best;
}

// ---------------------------------------------------------------------------
// Slices of geometric B tensors
// ---------------------------------------------------------------------------

struct SliceStats {
  MatrixFamily family;          // slices B_m in the H-aligned frame
  std::vector<double> S_star;   // S_star[i] = sum_{j,t} slice_i(j,t)^2
  std::vector<double> lambda;   // eigenvalues of the H-aligned slice
  double S_H = 0.0;             // sum of lambda^2
  double B_norm2 = 0.0;         // sum of S_star
};

// Rotates the frame so its first vector points along H (identity when H
// vanishes), rotates all three indices of b consistently, and extracts the
// n symmetric slices together with the spectral data of the H-aligned one.
inline SliceStats slices_from_b(const BTensor& bt,
                                const std::vector<double>& Hstar) {
  const int n = bt.b.n0;
  if (n < 2) throw InvalidInputError("slice extraction needs n >= 2");
  if (static_cast<int>(Hstar.size()) != n)
    throw InvalidInputError("slice extraction: H has wrong dimension");

  // Orthogonal R whose first column is H/|H|, completed by Gram-Schmidt over
  // the standard basis.  |H| = 0 keeps the identity.
  Matrix<double> R = Matrix<double>::identity(n);
  double hn = 0.0;
  for (double v : Hstar) hn += v * v;
  hn = std::sqrt(hn);
  if (hn > 0.0) {
    std::vector<std::vector<double>> cols;
    std::vector<double> v0(n);
    for (int i = 0; i < n; ++i) v0[i] = Hstar[i] / hn;
    cols.push_back(v0);
    for (int k = 0; k < n && static_cast<int>(cols.size()) < n; ++k) {
      std::vector<double> w(n, 0.0);
      w[k] = 1.0;
      for (const auto& c : cols) {
        double d = 0.0;
        for (int i = 0; i < n; ++i) d += w[i] * c[i];
        for (int i = 0; i < n; ++i) w[i] -= d * c[i];
      }
      double nw = 0.0;
      for (double x : w) nw += x * x;
      nw = std::sqrt(nw);
      if (nw < 1e-10) continue;
      for (double& x : w) x /= nw;
      cols.push_back(std::move(w));
    }
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) R(i, j) = cols[static_cast<std::size_t>(j)][i];
  }

  // b'(a, c, d) = sum R(k,a) R(l,c) R(t,d) b(k,l,t).
  Tensor3<double> rb(n, n, n);
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c)
      for (int d = 0; d < n; ++d) {
        double s = 0.0;
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            for (int t = 0; t < n; ++t)
              s += R(k, a) * R(l, c) * R(t, d) * bt.b(k, l, t);
        rb(a, c, d) = s;
      }

  SliceStats out;
  out.family.p = n;
  out.family.dim = n;
  out.S_star.assign(static_cast<std::size_t>(n), 0.0);
  for (int a = 0; a < n; ++a) {
    Matrix<double> slice(n, n);
    for (int c = 0; c < n; ++c)
      for (int d = 0; d < n; ++d) {
        slice(c, d) = rb(a, c, d);
        out.S_star[static_cast<std::size_t>(a)] += rb(a, c, d) * rb(a, c, d);
      }
    out.family.A.push_back(std::move(slice));
  }
  for (double s : out.S_star) out.B_norm2 += s;
  out.lambda = sym_eigenvalues(out.family.A[0]);
  for (double l : out.lambda) out.S_H += l * l;
  return out;
}

}  // namespace laglab
