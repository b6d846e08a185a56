#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "laglab/dual.hpp"
#include "laglab/errors.hpp"
#include "laglab/linalg.hpp"

// Ambient complex space forms in real affine coordinates.
//
// A point of C^n (flat, c = 0) or of CP^n in an affine chart (Fubini-Study,
// c > 0) is a real 2n-tuple y = (x_1..x_n, y_1..y_n) for z_k = x_k + i y_k.
// With that ordering the complex structure is the constant block matrix
//       J = [ 0  -I ]
//           [ I   0 ]
// and the Fubini-Study metric normalized to holomorphic sectional curvature
// 4c is (1/c) * Re[ ((1+|z|^2) delta_ij - conj(z_i) z_j) / (1+|z|^2)^2 ].
// Affine charts are holomorphic, so J has the same matrix in every chart and
// the metric formula is chart independent; chart_id is pure bookkeeping.

namespace laglab {

inline constexpr double kPi = 3.14159265358979323846;

enum class AmbientKind { Flat, FubiniStudy };

struct AmbientModel {
  AmbientKind kind = AmbientKind::Flat;
  int n = 2;        // complex dimension
  double c = 0.0;   // holomorphic sectional curvature / 4
  int chart_id = 0; // which affine chart of CP^n is active

  int real_dim() const { return 2 * n; }

  static AmbientModel flat(int n) {
    if (n < 1) throw InvalidInputError("AmbientModel: n must be >= 1");
    return AmbientModel{AmbientKind::Flat, n, 0.0, 0};
  }
  static AmbientModel fubini_study(int n, double c, int chart = 0) {
    if (n < 1) throw InvalidInputError("AmbientModel: n must be >= 1");
    if (!(c > 0.0))
      throw UnsupportedAmbientError(
          "AmbientModel: Fubini-Study requires c > 0");
    if (chart < 0 || chart > n)
      throw InvalidInputError("AmbientModel: chart_id out of range");
    return AmbientModel{AmbientKind::FubiniStudy, n, c, chart};
  }
};

inline constexpr double kFsConditionBound = 1e6;  // on |y|^2

template <class T>
void check_ambient_point(const AmbientModel& model, const std::vector<T>& y) {
  if (static_cast<int>(y.size()) != model.real_dim())
    throw InvalidInputError("ambient point has wrong dimension");
  double r2 = 0.0;
  for (const T& v : y) {
    double d = value(v);
    if (!std::isfinite(d))
      throw InvalidInputError("ambient point has non-finite coordinate");
    r2 += d * d;
  }
  if (model.kind == AmbientKind::FubiniStudy && r2 > kFsConditionBound)
    throw ChartConditionError(
        "affine-chart point is ill-conditioned; switch charts");
}

// J y = (-y_im, y_re): column form of [[0,-I],[I,0]].
template <class T>
std::vector<T> apply_J(int n, const std::vector<T>& v) {
  std::vector<T> r(2 * n);
  for (int k = 0; k < n; ++k) {
    r[k] = -v[n + k];
    r[n + k] = v[k];
  }
  return r;
}

inline Matrix<double> complex_structure_at(const AmbientModel& model,
                                           const std::vector<double>& y) {
  check_ambient_point(model, y);
  const int n = model.n;
  Matrix<double> J(2 * n, 2 * n);
  for (int k = 0; k < n; ++k) {
    J(k, n + k) = -1.0;
    J(n + k, k) = 1.0;
  }
  return J;
}

// Metric components G_AB(y), generic over the scalar so that nested duals
// produce exact derivatives of the metric.
template <class T>
Matrix<T> metric_at(const AmbientModel& model, const std::vector<T>& y) {
  check_ambient_point(model, y);
  const int n = model.n;
  Matrix<T> G(2 * n, 2 * n);
  if (model.kind == AmbientKind::Flat) {
    for (int i = 0; i < 2 * n; ++i) G(i, i) = T(1.0);
    return G;
  }
  // Hermitian matrix H_ij = ((1+|z|^2) d_ij - conj(z_i) z_j) / (1+|z|^2)^2;
  // real blocks G = (1/c) [[Re H, Im H], [-Im H, Re H]].
  T s(1.0);
  for (int k = 0; k < 2 * n; ++k) s += y[k] * y[k];
  T inv_s2 = 1.0 / (s * s);
  const double ic = 1.0 / model.c;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      T re = -(y[i] * y[j] + y[n + i] * y[n + j]);
      if (i == j) re += s;
      re *= inv_s2;
      T im = (y[n + i] * y[j] - y[i] * y[n + j]) * inv_s2;
      G(i, j) = ic * re;
      G(i, n + j) = ic * im;
      G(n + i, j) = -ic * im;
      G(n + i, n + j) = ic * re;
    }
  return G;
}

// Kaehler two-form: omega_AB = omega(d_A, d_B) = g(d_A, J d_B) = (G J)_AB.
template <class T>
Matrix<T> kahler_form_at(const AmbientModel& model, const std::vector<T>& y) {
  Matrix<T> G = metric_at(model, y);
  const int n = model.n;
  Matrix<T> w(2 * n, 2 * n);
  for (int a = 0; a < 2 * n; ++a)
    for (int k = 0; k < n; ++k) {
      // column of J: J e_k = e_{n+k}, J e_{n+k} = -e_k.
      w(a, k) = G(a, n + k);
      w(a, n + k) = -G(a, k);
    }
  return w;
}

// Christoffel symbols of an arbitrary metric functor at a generic-scalar
// point: Gamma^a_{bc} = 1/2 g^{ad} (d_b g_dc + d_c g_db - d_d g_bc).
// The metric derivative comes from one extra dual level, never from FD.
template <class MetricFn, class S>
Tensor3<S> christoffels_of(MetricFn&& metric, const std::vector<S>& y) {
  const int dim = static_cast<int>(y.size());
  using DS = Dual<S>;
  Matrix<S> G = metric(y);
  Matrix<S> Ginv = inverse(G);
  // dG[d](a,b) = d_d g_ab
  std::vector<Matrix<S>> dG(dim);
  for (int d = 0; d < dim; ++d) {
    std::vector<DS> ys(dim);
    for (int k = 0; k < dim; ++k) ys[k] = DS(y[k], S(k == d ? 1.0 : 0.0));
    Matrix<DS> Gd = metric(ys);
    dG[d] = Matrix<S>(dim, dim);
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) dG[d](a, b) = Gd(a, b).b;
  }
  Tensor3<S> gamma(dim, dim, dim);
  for (int b = 0; b < dim; ++b)
    for (int c = b; c < dim; ++c) {
      for (int a = 0; a < dim; ++a) {
        S s{};
        for (int d = 0; d < dim; ++d)
          s += Ginv(a, d) * (dG[b](d, c) + dG[c](d, b) - dG[d](b, c));
        s *= 0.5;
        gamma(a, b, c) = s;
        gamma(a, c, b) = s;
      }
    }
  return gamma;
}

template <class T>
Tensor3<T> christoffels_at(const AmbientModel& model,
                           const std::vector<T>& y) {
  check_ambient_point(model, y);
  if (model.kind == AmbientKind::Flat)
    return Tensor3<T>(2 * model.n, 2 * model.n, 2 * model.n);
  auto metric = [&model](const auto& yy) { return metric_at(model, yy); };
  return christoffels_of(metric, y);
}

// Fully lowered curvature tensor of a metric functor,
//   R_{abcd} = g_ae R^e_{bcd},  R(d_c, d_d) d_b = R^a_{bcd} d_a,
// with Gamma differentiated exactly through one dual level.
template <class MetricFn>
Tensor4<double> riemann_lowered_of(MetricFn&& metric,
                                   const std::vector<double>& y) {
  const int dim = static_cast<int>(y.size());
  Tensor3<double> gamma = christoffels_of(metric, y);
  // dgamma[d] = d_d Gamma
  std::vector<Tensor3<double>> dgamma(dim);
  for (int d = 0; d < dim; ++d) {
    std::vector<D1> ys(dim);
    for (int k = 0; k < dim; ++k) ys[k] = D1(y[k], k == d ? 1.0 : 0.0);
    Tensor3<D1> gd = christoffels_of(metric, ys);
    dgamma[d] = Tensor3<double>(dim, dim, dim);
    for (size_t i = 0; i < gd.a.size(); ++i) dgamma[d].a[i] = gd.a[i].b;
  }
  Matrix<double> G = metric(y);
  Tensor4<double> up(dim, dim, dim, dim);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b)
      for (int c = 0; c < dim; ++c)
        for (int d = 0; d < dim; ++d) {
          double s = dgamma[c](a, d, b) - dgamma[d](a, c, b);
          for (int e = 0; e < dim; ++e)
            s += gamma(a, c, e) * gamma(e, d, b) -
                 gamma(a, d, e) * gamma(e, c, b);
          up(a, b, c, d) = s;
        }
  Tensor4<double> low(dim, dim, dim, dim);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b)
      for (int c = 0; c < dim; ++c)
        for (int d = 0; d < dim; ++d) {
          double s = 0.0;
          for (int e = 0; e < dim; ++e) s += G(a, e) * up(e, b, c, d);
          low(a, b, c, d) = s;
        }
  return low;
}

// Differentiated route: curvature of the model metric via nested duals.
inline Tensor4<double> riemann_lowered_ad(const AmbientModel& model,
                                          const std::vector<double>& y) {
  check_ambient_point(model, y);
  auto metric = [&model](const auto& yy) { return metric_at(model, yy); };
  return riemann_lowered_of(metric, y);
}

// Space-form closed form
//   K_{abcd} = c { g_ac g_bd - g_ad g_bc
//                  + w_ac w_bd - w_ad w_bc + 2 w_ab w_cd },  w = G J.
inline Tensor4<double> spaceform_curvature_at(const AmbientModel& model,
                                              const std::vector<double>& y) {
  check_ambient_point(model, y);
  const int dim = model.real_dim();
  Tensor4<double> K(dim, dim, dim, dim);
  if (model.kind == AmbientKind::Flat) return K;  // c = 0
  Matrix<double> G = metric_at(model, y);
  Matrix<double> w = kahler_form_at(model, y);
  const double c = model.c;
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b)
      for (int cc = 0; cc < dim; ++cc)
        for (int d = 0; d < dim; ++d)
          K(a, b, cc, d) =
              c * (G(a, cc) * G(b, d) - G(a, d) * G(b, cc) +
                   w(a, cc) * w(b, d) - w(a, d) * w(b, cc) +
                   2.0 * w(a, b) * w(cc, d));
  return K;
}

// Max-norm mismatch between the differentiated curvature and the space-form
// closed form; certifies the metric really has constant holomorphic
// sectional curvature 4c in this chart.
inline double curvature_residual(const AmbientModel& model,
                                 const std::vector<double>& y) {
  Tensor4<double> R = riemann_lowered_ad(model, y);
  Tensor4<double> K = spaceform_curvature_at(model, y);
  double r = 0.0;
  for (size_t i = 0; i < R.a.size(); ++i)
    r = std::max(r, std::abs(R.a[i] - K.a[i]));
  return r;
}

// Kaehler check: (nabla_C J)^A_B = Gamma^A_{CE} J^E_B - Gamma^E_{CB} J^A_E
// (J constant in the chart, so no dJ term).  Should vanish identically.
inline double nabla_J_residual(const AmbientModel& model,
                               const std::vector<double>& y) {
  check_ambient_point(model, y);
  if (model.kind == AmbientKind::Flat) return 0.0;
  const int n = model.n, dim = 2 * n;
  Tensor3<double> gamma = christoffels_at(model, y);
  Matrix<double> J = complex_structure_at(model, y);
  double r = 0.0;
  for (int cc = 0; cc < dim; ++cc)
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) {
        double s = 0.0;
        for (int e = 0; e < dim; ++e)
          s += gamma(a, cc, e) * J(e, b) - gamma(e, cc, b) * J(a, e);
        r = std::max(r, std::abs(s));
      }
  return r;
}

// Scalar curvature g^{ac} g^{bd} R_{abcd}; a convenient chart-covariant
// scalar (equals 4 n (n+1) c for the space form).
inline double scalar_curvature(const AmbientModel& model,
                               const std::vector<double>& y) {
  Tensor4<double> R = riemann_lowered_ad(model, y);
  Matrix<double> Ginv = inverse(metric_at(model, y));
  const int dim = model.real_dim();
  double s = 0.0;
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b)
      for (int c = 0; c < dim; ++c)
        for (int d = 0; d < dim; ++d)
          s += Ginv(a, c) * Ginv(b, d) * R(a, b, c, d);
  return s;
}

// Affine-chart transition of CP^n: interpret y as chart `from` coordinates,
// rebuild homogeneous coordinates, divide by the `to` slot.
inline std::vector<double> fs_chart_transition(int n,
                                               const std::vector<double>& y,
                                               int from, int to) {
  if (static_cast<int>(y.size()) != 2 * n)
    throw InvalidInputError("fs_chart_transition: bad point size");
  if (from < 0 || from > n || to < 0 || to > n)
    throw InvalidInputError("fs_chart_transition: chart index out of range");
  // homogeneous w_0..w_n with w_from = 1
  std::vector<double> wre(n + 1), wim(n + 1);
  wre[from] = 1.0;
  int slot = 0;
  for (int j = 0; j <= n; ++j) {
    if (j == from) continue;
    wre[j] = y[slot];
    wim[j] = y[n + slot];
    ++slot;
  }
  double dre = wre[to], dim_ = wim[to];
  double den = dre * dre + dim_ * dim_;
  if (den < 1e-300)
    throw ChartConditionError("fs_chart_transition: target slot vanishes");
  std::vector<double> out(2 * n);
  slot = 0;
  for (int j = 0; j <= n; ++j) {
    if (j == to) continue;
    out[slot] = (wre[j] * dre + wim[j] * dim_) / den;
    out[n + slot] = (wim[j] * dre - wre[j] * dim_) / den;
    ++slot;
  }
  return out;
}

}  // namespace laglab
