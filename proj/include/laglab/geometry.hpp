#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "laglab/ambient.hpp"
#include "laglab/dual.hpp"
#include "laglab/errors.hpp"
#include "laglab/jets.hpp"
#include "laglab/linalg.hpp"

// Pointwise submanifold geometry: adapted frames, the second fundamental
// form in frame components, its trace-free part, and the pointwise
// consistency checks (Lagrangian defect, norm identity, Gauss equations).
//
// Everything is computed in a Gram-Schmidt frame taken in fixed index order
// from the coordinate tangents, so frame components are deterministic and
// smooth wherever the immersion is non-degenerate.  The functions are
// templated on the scalar: running them over Dual<double> parameter points
// yields exact first derivatives of every frame quantity.

namespace laglab {

inline constexpr double kDegenerateFrameRatio = 1e-12;  // 1/condition bound

template <class T>
struct GeomCore {
  int n = 0, m = 0;
  std::vector<T> psi;    // m
  std::vector<T> d1;     // m x n, [a*n + i]
  std::vector<T> d2;     // m x n x n
  Matrix<T> G;           // ambient metric at psi
  Matrix<T> g, g_inv;    // induced metric
  Tensor3<T> gamma_ind;  // Gamma^k_{ij} of g, [k][i][j]
  std::vector<T> II;     // normal-valued second fundamental form, m x n x n
  Matrix<T> C;           // coord -> frame: e_i = sum_a C(a,i) dpsi_a
  std::vector<T> e;      // frame vectors, n x m [i*m + a]
  std::vector<T> estar;  // J e_i, n x m
  Tensor3<T> h;          // h^{m*}_{ij}, [m][i][j]
  std::vector<T> Hamb;   // mean curvature vector (ambient components)
  std::vector<T> Hstar;  // H^{m*} = <H, J e_m>
  T Hnorm2{};

  const T& D1at(int a, int i) const { return d1[static_cast<size_t>(a) * n + i]; }
  const T& D2at(int a, int i, int j) const {
    return d2[(static_cast<size_t>(a) * n + i) * n + j];
  }
  const T& IIat(int a, int i, int j) const {
    return II[(static_cast<size_t>(a) * n + i) * n + j];
  }
};

namespace detail {

template <class T>
T g_inner(const Matrix<T>& G, const std::vector<T>& x,
          const std::vector<T>& y) {
  const int m = G.rows;
  T s{};
  for (int a = 0; a < m; ++a) {
    T gx{};
    for (int b = 0; b < m; ++b) gx += G(a, b) * y[b];
    s += x[a] * gx;
  }
  return s;
}

}  // namespace detail

// Assemble all pointwise geometry from raw jet arrays (order 2).
template <class T>
GeomCore<T> geom_from_arrays(const AmbientModel& model, std::vector<T> psi,
                             std::vector<T> d1, std::vector<T> d2, int n,
                             bool need_frame = true) {
  GeomCore<T> P;
  P.n = n;
  P.m = model.real_dim();
  const int m = P.m;
  P.psi = std::move(psi);
  P.d1 = std::move(d1);
  P.d2 = std::move(d2);
  P.G = metric_at(model, P.psi);

  // induced metric g_ij = G(d_i psi, d_j psi)
  P.g = Matrix<T>(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      T s{};
      for (int a = 0; a < m; ++a) {
        T gx{};
        for (int b = 0; b < m; ++b) gx += P.G(a, b) * P.D1at(b, j);
        s += P.D1at(a, i) * gx;
      }
      P.g(i, j) = s;
      P.g(j, i) = s;
    }
  try {
    P.g_inv = inverse(P.g);
  } catch (const NumericalError&) {
    throw DegenerateImmersionError(
        "induced metric is singular: the differential drops rank");
  }

  // ambient-covariant second derivative D_ij = d2_ij + Gamma~(d1_i, d1_j)
  std::vector<T> D((static_cast<size_t>(m)) * n * n);
  auto Dat = [&](int a, int i, int j) -> T& {
    return D[(static_cast<size_t>(a) * n + i) * n + j];
  };
  if (model.kind == AmbientKind::Flat) {
    D = P.d2;
  } else {
    Tensor3<T> gam = christoffels_at(model, P.psi);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        for (int a = 0; a < m; ++a) {
          T s = P.D2at(a, i, j);
          for (int b = 0; b < m; ++b) {
            T acc{};
            for (int c = 0; c < m; ++c) acc += gam(a, b, c) * P.D1at(c, j);
            s += P.D1at(b, i) * acc;
          }
          Dat(a, i, j) = s;
          Dat(a, j, i) = s;
        }
      }
  }

  // tangential projection gives the induced Christoffels,
  // Gamma^k_{ij} = g^{kl} G(D_ij, d_l psi); the remainder is II (normal).
  P.gamma_ind = Tensor3<T>(n, n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      std::vector<T> proj(n);
      for (int l = 0; l < n; ++l) {
        T s{};
        for (int a = 0; a < m; ++a) {
          T gx{};
          for (int b = 0; b < m; ++b) gx += P.G(a, b) * P.D1at(b, l);
          s += Dat(a, i, j) * gx;
        }
        proj[l] = s;
      }
      for (int k = 0; k < n; ++k) {
        T s{};
        for (int l = 0; l < n; ++l) s += P.g_inv(k, l) * proj[l];
        P.gamma_ind(k, i, j) = s;
        P.gamma_ind(k, j, i) = s;
      }
    }
  P.II.assign(static_cast<size_t>(m) * n * n, T{});
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int a = 0; a < m; ++a) {
        T s = Dat(a, i, j);
        for (int k = 0; k < n; ++k)
          s -= P.gamma_ind(k, i, j) * P.D1at(a, k);
        P.II[(static_cast<size_t>(a) * n + i) * n + j] = s;
        P.II[(static_cast<size_t>(a) * n + j) * n + i] = s;
      }

  if (!need_frame) return P;

  // Gram-Schmidt in fixed index order; coefficients kept so frame fields
  // stay smooth functions of the parameters.
  P.C = Matrix<T>(n, n);
  P.e.assign(static_cast<size_t>(n) * m, T{});
  std::vector<T> w(m), coef(n);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < m; ++a) w[a] = P.D1at(a, i);
    for (int k = 0; k < n; ++k) coef[k] = T(k == i ? 1.0 : 0.0);
    for (int j = 0; j < i; ++j) {
      std::vector<T> ej(P.e.begin() + static_cast<size_t>(j) * m,
                        P.e.begin() + static_cast<size_t>(j + 1) * m);
      T dot{};
      for (int a = 0; a < m; ++a) {
        T gx{};
        for (int b = 0; b < m; ++b) gx += P.G(a, b) * ej[b];
        dot += w[a] * gx;
      }
      for (int a = 0; a < m; ++a) w[a] -= dot * ej[a];
      for (int k = 0; k < n; ++k) coef[k] -= dot * P.C(k, j);
    }
    T nrm2{};
    for (int a = 0; a < m; ++a) {
      T gx{};
      for (int b = 0; b < m; ++b) gx += P.G(a, b) * w[b];
      nrm2 += w[a] * gx;
    }
    double vscale = std::sqrt(std::max(value(P.g(i, i)), 0.0));
    if (!(value(nrm2) > 0.0) ||
        std::sqrt(value(nrm2)) < kDegenerateFrameRatio * vscale)
      throw DegenerateImmersionError(
          "rank-deficient differential: frame construction failed");
    T nrm = sqrt(nrm2);
    for (int a = 0; a < m; ++a)
      P.e[static_cast<size_t>(i) * m + a] = w[a] / nrm;
    for (int k = 0; k < n; ++k) P.C(k, i) = coef[k] / nrm;
  }
  P.estar.assign(static_cast<size_t>(n) * m, T{});
  const int nc = model.n;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < nc; ++k) {
      P.estar[static_cast<size_t>(i) * m + k] =
          -P.e[static_cast<size_t>(i) * m + nc + k];
      P.estar[static_cast<size_t>(i) * m + nc + k] =
          P.e[static_cast<size_t>(i) * m + k];
    }

  // frame components h^{m*}_{ij} = G(II(e_i, e_j), J e_m)
  P.h = Tensor3<T>(n, n, n);
  std::vector<T> IIf(m);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      for (int a = 0; a < m; ++a) {
        T s{};
        for (int al = 0; al < n; ++al) {
          T inner{};
          for (int be = 0; be < n; ++be)
            inner += P.C(be, j) * P.IIat(a, al, be);
          s += P.C(al, i) * inner;
        }
        IIf[a] = s;
      }
      for (int mm = 0; mm < n; ++mm) {
        std::vector<T> es(P.estar.begin() + static_cast<size_t>(mm) * m,
                          P.estar.begin() + static_cast<size_t>(mm + 1) * m);
        T hv = detail::g_inner(P.G, IIf, es);
        P.h(mm, i, j) = hv;
        P.h(mm, j, i) = hv;
      }
      if (i == j) {
        if (P.Hamb.empty()) P.Hamb.assign(m, T{});
        for (int a = 0; a < m; ++a) P.Hamb[a] += IIf[a] / double(n);
      }
    }
  P.Hstar.assign(n, T{});
  for (int mm = 0; mm < n; ++mm) {
    std::vector<T> es(P.estar.begin() + static_cast<size_t>(mm) * m,
                      P.estar.begin() + static_cast<size_t>(mm + 1) * m);
    P.Hstar[mm] = detail::g_inner(P.G, P.Hamb, es);
  }
  P.Hnorm2 = detail::g_inner(P.G, P.Hamb, P.Hamb);
  return P;
}

// Evaluate the full pointwise geometry at a generic-scalar parameter point.
// Chart evaluations run two dual levels above T (for the order-2 jet).
template <class T>
GeomCore<T> eval_geom_core(const AmbientModel& model, const Chart& chart,
                           const std::vector<T>& u, bool need_frame = true) {
  static_assert(scalar_depth_v<T> <= 1,
                "eval_geom_core supports scalar depth 0 or 1");
  const int n = static_cast<int>(u.size());
  const int m = model.real_dim();
  std::vector<T> psi = chart(u);
  std::vector<T> d1(static_cast<size_t>(m) * n);
  using DT = Dual<T>;
  for (int i = 0; i < n; ++i) {
    std::vector<DT> us(n);
    for (int a = 0; a < n; ++a) us[a] = DT(u[a], T(a == i ? 1.0 : 0.0));
    std::vector<DT> r = chart(us);
    for (int a = 0; a < m; ++a) d1[static_cast<size_t>(a) * n + i] = r[a].b;
  }
  std::vector<T> d2(static_cast<size_t>(m) * n * n);
  using DDT = Dual<DT>;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      std::vector<DDT> us(n);
      for (int a = 0; a < n; ++a)
        us[a] = DDT(DT(u[a], T(a == i ? 1.0 : 0.0)),
                    DT(T(a == j ? 1.0 : 0.0), T{}));
      std::vector<DDT> r = chart(us);
      for (int a = 0; a < m; ++a) {
        d2[(static_cast<size_t>(a) * n + i) * n + j] = r[a].b.b;
        d2[(static_cast<size_t>(a) * n + j) * n + i] = r[a].b.b;
      }
    }
  return geom_from_arrays(model, std::move(psi), std::move(d1), std::move(d2),
                          n, need_frame);
}

// Induced metric alone, generic over the scalar.  Needs only first
// derivatives of the chart, so it tolerates two further dual levels on top:
// exactly what differentiating the intrinsic curvature of g requires.
template <class T>
Matrix<T> induced_metric_at(const AmbientModel& model, const Chart& chart,
                            const std::vector<T>& u) {
  static_assert(scalar_depth_v<T> <= 2,
                "induced_metric_at supports scalar depth 0..2");
  const int n = static_cast<int>(u.size());
  const int m = model.real_dim();
  std::vector<T> psi = chart(u);
  std::vector<T> d1(static_cast<size_t>(m) * n);
  using DT = Dual<T>;
  for (int i = 0; i < n; ++i) {
    std::vector<DT> us(n);
    for (int a = 0; a < n; ++a) us[a] = DT(u[a], T(a == i ? 1.0 : 0.0));
    std::vector<DT> r = chart(us);
    for (int a = 0; a < m; ++a) d1[static_cast<size_t>(a) * n + i] = r[a].b;
  }
  Matrix<T> G = metric_at(model, psi);
  Matrix<T> g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      T s{};
      for (int a = 0; a < m; ++a) {
        T w{};
        for (int b = 0; b < m; ++b)
          w += G(a, b) * d1[static_cast<size_t>(b) * n + j];
        s += d1[static_cast<size_t>(a) * n + i] * w;
      }
      g(i, j) = s;
    }
  return g;
}

// --- public pointwise API on jets ---

struct Frame {
  std::vector<double> e;      // n x m
  std::vector<double> estar;  // n x m
  Matrix<double> g, g_inv;
  Matrix<double> coord_to_frame;  // e_i = sum_a C(a,i) dpsi_a
};

struct FundForms {
  Tensor3<double> h;           // h^{m*}_{ij}
  std::vector<double> H;       // ambient mean curvature vector
  std::vector<double> Hstar;   // H^{m*}
  double Hnorm2 = 0.0;
};

struct BTensor {
  Tensor3<double> b;       // trace-free part
  Tensor3<double> c_part;  // umbilic-type part removed from h
};

struct PointInvariants {
  double h_norm2 = 0.0;
  double B_norm2 = 0.0;
  double H_norm2 = 0.0;
  double eq3_residual = 0.0;       // | ||b||^2 - (||h||^2 - 3n^2/(n+2)|H|^2) |
  double lagrangian_defect = 0.0;
  double h_symmetry_defect = 0.0;  // worst violation of full symmetry
  std::optional<double> gauss_residual;
};

namespace detail {

inline GeomCore<double> core_from_jet(const AmbientModel& model,
                                      const Jet& jet, bool need_frame) {
  if (jet.order < 2)
    throw InvalidInputError("geometry needs a jet of order >= 2");
  return geom_from_arrays(model, jet.value, jet.d1, jet.d2, jet.n,
                          need_frame);
}

}  // namespace detail

inline Frame build_frame(const AmbientModel& model, const Jet& jet) {
  if (jet.order < 1)
    throw InvalidInputError("build_frame needs a jet of order >= 1");
  // order-1 jets carry no d2; fabricate zeros so the core assembles.
  Jet j2 = jet;
  if (j2.order < 2) {
    j2.order = 2;
    j2.d2.assign(static_cast<size_t>(jet.m) * jet.n * jet.n, 0.0);
  }
  GeomCore<double> P = detail::core_from_jet(model, j2, true);
  Frame f;
  f.e = P.e;
  f.estar = P.estar;
  f.g = P.g;
  f.g_inv = P.g_inv;
  f.coord_to_frame = P.C;
  return f;
}

// sup_{i<j} |omega(d_i psi, d_j psi)| / (|d_i psi| |d_j psi|)
inline double lagrangian_defect(const AmbientModel& model, const Jet& jet) {
  if (jet.order < 1)
    throw InvalidInputError("lagrangian_defect needs a jet of order >= 1");
  const int n = jet.n, m = jet.m;
  Matrix<double> w = kahler_form_at(model, jet.value);
  Matrix<double> G = metric_at(model, jet.value);
  std::vector<double> vi(m), vj(m);
  double defect = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < m; ++a) vi[a] = jet.D1at(a, i);
    double ni = std::sqrt(detail::g_inner(G, vi, vi));
    for (int j = i + 1; j < n; ++j) {
      for (int a = 0; a < m; ++a) vj[a] = jet.D1at(a, j);
      double nj = std::sqrt(detail::g_inner(G, vj, vj));
      double om = 0.0;
      for (int a = 0; a < m; ++a) {
        double s = 0.0;
        for (int b = 0; b < m; ++b) s += w(a, b) * vj[b];
        om += vi[a] * s;
      }
      defect = std::max(defect, std::abs(om) / (ni * nj));
    }
  }
  return defect;
}

inline FundForms second_fundamental_form(const AmbientModel& model,
                                         const Jet& jet,
                                         const Frame& /*frame*/) {
  GeomCore<double> P = detail::core_from_jet(model, jet, true);
  FundForms ff;
  ff.h = P.h;
  ff.H = P.Hamb;
  ff.Hstar = P.Hstar;
  ff.Hnorm2 = P.Hnorm2;
  return ff;
}

// b = h - c with c^{m*}_{ij} = n/(n+2) (H^{m*} d_ij + H^{i*} d_jm + H^{j*} d_im).
inline BTensor b_tensor(const FundForms& ff, int n) {
  BTensor bt;
  bt.b = Tensor3<double>(n, n, n);
  bt.c_part = Tensor3<double>(n, n, n);
  const double f = double(n) / double(n + 2);
  for (int mm = 0; mm < n; ++mm)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double cv = 0.0;
        if (i == j) cv += ff.Hstar[mm];
        if (j == mm) cv += ff.Hstar[i];
        if (i == mm) cv += ff.Hstar[j];
        cv *= f;
        bt.c_part(mm, i, j) = cv;
        bt.b(mm, i, j) = ff.h(mm, i, j) - cv;
      }
  return bt;
}

namespace detail {

inline double tensor3_norm2(const Tensor3<double>& t) {
  double s = 0.0;
  for (double x : t.a) s += x * x;
  return s;
}

// worst violation of h^{m*}_{ij} = h^{m*}_{ji} = h^{i*}_{mj}
inline double full_symmetry_defect(const Tensor3<double>& h) {
  const int n = h.n0;
  double d = 0.0;
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        d = std::max(d, std::abs(h(m, i, j) - h(m, j, i)));
        d = std::max(d, std::abs(h(m, i, j) - h(i, m, j)));
      }
  return d;
}

}  // namespace detail

inline PointInvariants point_invariants(const FundForms& ff, const BTensor& bt,
                                        double lagrangian_defect_value = 0.0) {
  const int n = ff.h.n0;
  PointInvariants inv;
  inv.h_norm2 = detail::tensor3_norm2(ff.h);
  inv.B_norm2 = detail::tensor3_norm2(bt.b);
  inv.H_norm2 = ff.Hnorm2;
  const double k = 3.0 * n * n / double(n + 2);
  inv.eq3_residual = std::abs(inv.B_norm2 - (inv.h_norm2 - k * inv.H_norm2));
  inv.lagrangian_defect = lagrangian_defect_value;
  inv.h_symmetry_defect = detail::full_symmetry_defect(ff.h);
  return inv;
}

// Both Gauss-type identities at one parameter point: the intrinsic curvature
// of the induced metric against the space-form term plus the h*h terms, in
// tangent and (J-identified) normal form.  Returns the larger max-norm
// residual of the two.
inline double gauss_residual(const AmbientModel& model, const ImmersionMap& map,
                             const ParamPoint& p) {
  const Chart& ch = detail::chart_of(map, p);
  const int n = map.n, m = model.real_dim();
  GeomCore<double> P = eval_geom_core(model, ch, p.u, true);

  // intrinsic curvature of the induced metric, coordinates -> frame
  auto induced_metric = [&](const auto& uu) {
    return induced_metric_at(model, ch, uu);
  };
  Tensor4<double> Rc = riemann_lowered_of(induced_metric, p.u);
  Tensor4<double> Rf(n, n, n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = 0.0;
          for (int al = 0; al < n; ++al)
            for (int be = 0; be < n; ++be)
              for (int ga = 0; ga < n; ++ga)
                for (int de = 0; de < n; ++de)
                  s += P.C(al, i) * P.C(be, j) * P.C(ga, k) * P.C(de, l) *
                       Rc(al, be, ga, de);
          Rf(i, j, k, l) = s;
        }

  // space-form curvature evaluated on frame vectors
  Matrix<double> w = kahler_form_at(model, P.psi);
  const double c = model.c;
  auto gdot = [&](const std::vector<double>& x, const std::vector<double>& y) {
    return detail::g_inner(P.G, x, y);
  };
  auto wdot = [&](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (int a = 0; a < m; ++a) {
      double t = 0.0;
      for (int b = 0; b < m; ++b) t += w(a, b) * y[b];
      s += x[a] * t;
    }
    return s;
  };
  auto K_eval = [&](const std::vector<double>& A, const std::vector<double>& B,
                    const std::vector<double>& Cv,
                    const std::vector<double>& Dv) {
    return c * (gdot(A, Cv) * gdot(B, Dv) - gdot(A, Dv) * gdot(B, Cv) +
                wdot(A, Cv) * wdot(B, Dv) - wdot(A, Dv) * wdot(B, Cv) +
                2.0 * wdot(A, B) * wdot(Cv, Dv));
  };
  auto evec = [&](int i) {
    return std::vector<double>(P.e.begin() + static_cast<size_t>(i) * m,
                               P.e.begin() + static_cast<size_t>(i + 1) * m);
  };
  auto esvec = [&](int i) {
    return std::vector<double>(P.estar.begin() + static_cast<size_t>(i) * m,
                               P.estar.begin() + static_cast<size_t>(i + 1) * m);
  };

  double res = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          // tangent display
          double hh = 0.0;
          for (int mm = 0; mm < n; ++mm)
            hh += P.h(mm, j, l) * P.h(mm, i, k) -
                  P.h(mm, i, l) * P.h(mm, j, k);
          double rhs_t = K_eval(evec(i), evec(j), evec(k), evec(l)) + hh;
          res = std::max(res, std::abs(Rf(i, j, k, l) - rhs_t));
          // normal display (normal bundle identified with TM through J)
          double hh2 = 0.0;
          for (int mm = 0; mm < n; ++mm)
            hh2 += P.h(j, l, mm) * P.h(i, mm, k) -
                   P.h(i, mm, l) * P.h(j, mm, k);
          double rhs_n = K_eval(esvec(i), esvec(j), evec(k), evec(l)) + hh2;
          res = std::max(res, std::abs(Rf(i, j, k, l) - rhs_n));
        }
  return res;
}

}  // namespace laglab
