#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "laglab/ambient.hpp"
#include "laglab/dual.hpp"
#include "laglab/errors.hpp"

// Immersions as chart atlases of scalar-generic evaluation procedures, and
// jets (derivatives up to order 3) of those procedures.
//
// A Chart stores one generic evaluation procedure type-erased at the four
// scalar depths the library needs (double, and duals nested 1..3 deep).
// Exact jets fall out of seeding nested duals; the finite-difference engine
// exists as an independent cross-check oracle, never as the primary route.

namespace laglab {

struct ParamPoint {
  int chart = 0;
  std::vector<double> u;
};

struct Box {
  std::vector<double> lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
};

class Chart {
 public:
  Box domain;
  std::vector<uint8_t> periodic;  // per axis
  std::vector<double> period;     // per axis (0 when not periodic)
  // integration region indicator (atlas partition); default: whole box.
  std::function<bool(const std::vector<double>&)> in_region;

  std::function<std::vector<double>(const std::vector<double>&)> f0;
  std::function<std::vector<D1>(const std::vector<D1>&)> f1;
  std::function<std::vector<D2>(const std::vector<D2>&)> f2;
  std::function<std::vector<D3>(const std::vector<D3>&)> f3;
  // Evaluation with any point-dependent internal choices (e.g. the affine
  // chart of CP^n) frozen at a reference point; finite-difference stencils
  // need this so every stencil evaluation uses the same smooth branch.
  std::function<std::vector<double>(const std::vector<double>&,
                                    const std::vector<double>&)>
      f0_ref;

  template <class F>
  static Chart make(Box box, F f) {
    Chart c;
    const int d = box.dim();
    c.domain = std::move(box);
    c.periodic.assign(d, 0);
    c.period.assign(d, 0.0);
    c.in_region = [](const std::vector<double>&) { return true; };
    c.f0 = [f](const std::vector<double>& u) { return f(u); };
    c.f1 = [f](const std::vector<D1>& u) { return f(u); };
    c.f2 = [f](const std::vector<D2>& u) { return f(u); };
    c.f3 = [f](const std::vector<D3>& u) { return f(u); };
    c.f0_ref = [f](const std::vector<double>& u, const std::vector<double>&) {
      return f(u);
    };
    return c;
  }

  template <class T>
  std::vector<T> operator()(const std::vector<T>& u) const {
    constexpr int depth = scalar_depth_v<T>;
    static_assert(depth >= 0 && depth <= 3,
                  "chart evaluation supports scalar depth 0..3");
    if constexpr (depth == 0)
      return f0(u);
    else if constexpr (depth == 1)
      return f1(u);
    else if constexpr (depth == 2)
      return f2(u);
    else
      return f3(u);
  }

  bool contains(const std::vector<double>& u, double tol = 1e-12) const {
    if (static_cast<int>(u.size()) != domain.dim()) return false;
    for (int i = 0; i < domain.dim(); ++i) {
      if (periodic[i]) continue;  // periodic axes accept any value
      if (u[i] < domain.lo[i] - tol || u[i] > domain.hi[i] + tol) return false;
    }
    return true;
  }
};

struct ImmersionMap {
  int n = 0;            // intrinsic dimension
  AmbientModel target;  // ambient space descriptor
  std::vector<Chart> atlas;
  std::string name;
  // Advertised structure; drives which certification checks apply.
  bool lagrangian = true;
  bool conformal_maslov = true;
  bool closed = true;
};

struct Jet {
  int order = 0;
  int n = 0;  // parameter dimension
  int m = 0;  // ambient real dimension
  std::vector<double> value;  // m
  std::vector<double> d1;     // m*n            [a*n + i]
  std::vector<double> d2;     // m*n*n          [(a*n + i)*n + j]
  std::vector<double> d3;     // m*n*n*n

  double& D1at(int a, int i) { return d1[static_cast<size_t>(a) * n + i]; }
  double D1at(int a, int i) const { return d1[static_cast<size_t>(a) * n + i]; }
  double& D2at(int a, int i, int j) {
    return d2[(static_cast<size_t>(a) * n + i) * n + j];
  }
  double D2at(int a, int i, int j) const {
    return d2[(static_cast<size_t>(a) * n + i) * n + j];
  }
  double& D3at(int a, int i, int j, int k) {
    return d3[((static_cast<size_t>(a) * n + i) * n + j) * n + k];
  }
  double D3at(int a, int i, int j, int k) const {
    return d3[((static_cast<size_t>(a) * n + i) * n + j) * n + k];
  }
};

enum class JetEngine { Exact, Fd };

namespace detail {

inline const Chart& chart_of(const ImmersionMap& map, const ParamPoint& p) {
  if (p.chart < 0 || p.chart >= static_cast<int>(map.atlas.size()))
    throw DomainError("parameter point names a chart outside the atlas");
  const Chart& ch = map.atlas[p.chart];
  if (static_cast<int>(p.u.size()) != ch.domain.dim())
    throw DomainError("parameter point has wrong dimension");
  for (double v : p.u)
    if (!std::isfinite(v))
      throw InvalidInputError("parameter point has non-finite coordinate");
  if (!ch.contains(p.u))
    throw DomainError("parameter point lies outside the chart domain");
  return ch;
}

inline void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x))
      throw EvaluationError(std::string("non-finite ") + what +
                            " in chart evaluation");
}

inline Jet evaluate_jet_exact(const Chart& ch, const std::vector<double>& u,
                              int order, int m) {
  const int n = static_cast<int>(u.size());
  Jet jet;
  jet.order = order;
  jet.n = n;
  jet.m = m;
  jet.value = ch(u);
  check_finite(jet.value, "value");
  if (order >= 1) {
    jet.d1.assign(static_cast<size_t>(m) * n, 0.0);
    for (int i = 0; i < n; ++i) {
      std::vector<D1> us(n);
      for (int a = 0; a < n; ++a) us[a] = D1(u[a], a == i ? 1.0 : 0.0);
      std::vector<D1> r = ch(us);
      for (int a = 0; a < m; ++a) jet.D1at(a, i) = r[a].b;
    }
    check_finite(jet.d1, "derivative");
  }
  if (order >= 2) {
    jet.d2.assign(static_cast<size_t>(m) * n * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        std::vector<D2> us(n);
        for (int a = 0; a < n; ++a)
          us[a] = D2(D1(u[a], a == i ? 1.0 : 0.0),
                     D1(a == j ? 1.0 : 0.0, 0.0));
        std::vector<D2> r = ch(us);
        for (int a = 0; a < m; ++a) {
          jet.D2at(a, i, j) = r[a].b.b;
          jet.D2at(a, j, i) = r[a].b.b;
        }
      }
    check_finite(jet.d2, "second derivative");
  }
  if (order >= 3) {
    jet.d3.assign(static_cast<size_t>(m) * n * n * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        for (int k = j; k < n; ++k) {
          std::vector<D3> us(n);
          for (int a = 0; a < n; ++a)
            us[a] = D3(D2(D1(u[a], a == i ? 1.0 : 0.0),
                          D1(a == j ? 1.0 : 0.0, 0.0)),
                       D2(D1(a == k ? 1.0 : 0.0, 0.0), D1(0.0, 0.0)));
          std::vector<D3> r = ch(us);
          for (int a = 0; a < m; ++a) {
            double v = r[a].b.b.b;
            jet.D3at(a, i, j, k) = v;
            jet.D3at(a, i, k, j) = v;
            jet.D3at(a, j, i, k) = v;
            jet.D3at(a, j, k, i) = v;
            jet.D3at(a, k, i, j) = v;
            jet.D3at(a, k, j, i) = v;
          }
        }
    check_finite(jet.d3, "third derivative");
  }
  return jet;
}

// Recursive central differences; every nested application is a plain
// two-point centered stencil, so mixed partials stay symmetric up to
// roundoff after averaging.
inline std::vector<double> fd_diff(
    const std::function<std::vector<double>(const std::vector<double>&)>& f,
    const std::vector<double>& u, const std::vector<int>& axes, int from,
    const std::vector<double>& h, int m) {
  if (from == static_cast<int>(axes.size())) return f(u);
  int ax = axes[from];
  std::vector<double> up = u, dn = u;
  up[ax] += h[ax];
  dn[ax] -= h[ax];
  std::vector<double> fp = fd_diff(f, up, axes, from + 1, h, m);
  std::vector<double> fm = fd_diff(f, dn, axes, from + 1, h, m);
  std::vector<double> r(m);
  for (int a = 0; a < m; ++a) r[a] = (fp[a] - fm[a]) / (2.0 * h[ax]);
  return r;
}

inline Jet evaluate_jet_fd(const Chart& ch, const std::vector<double>& u,
                           int order, int m) {
  const int n = static_cast<int>(u.size());
  Jet jet;
  jet.order = order;
  jet.n = n;
  jet.m = m;
  jet.value = ch.f0(u);
  check_finite(jet.value, "value");
  // step per axis: eps^(1/(order+2)) scaled by coordinate magnitude
  const double eps = std::numeric_limits<double>::epsilon();
  const double base = std::pow(eps, 1.0 / (order + 2));
  std::vector<double> h(n);
  for (int i = 0; i < n; ++i) h[i] = base * std::max(1.0, std::abs(u[i]));
  auto frozen = [&ch, &u](const std::vector<double>& q) {
    return ch.f0_ref(q, u);
  };
  std::function<std::vector<double>(const std::vector<double>&)> f = frozen;
  if (order >= 1) {
    jet.d1.assign(static_cast<size_t>(m) * n, 0.0);
    for (int i = 0; i < n; ++i) {
      std::vector<double> di = fd_diff(f, u, {i}, 0, h, m);
      for (int a = 0; a < m; ++a) jet.D1at(a, i) = di[a];
    }
  }
  if (order >= 2) {
    jet.d2.assign(static_cast<size_t>(m) * n * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        std::vector<double> dij = fd_diff(f, u, {i, j}, 0, h, m);
        for (int a = 0; a < m; ++a) {
          jet.D2at(a, i, j) = dij[a];
          jet.D2at(a, j, i) = dij[a];
        }
      }
  }
  if (order >= 3) {
    jet.d3.assign(static_cast<size_t>(m) * n * n * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        for (int k = j; k < n; ++k) {
          std::vector<double> dijk = fd_diff(f, u, {i, j, k}, 0, h, m);
          for (int a = 0; a < m; ++a) {
            double v = dijk[a];
            jet.D3at(a, i, j, k) = v;
            jet.D3at(a, i, k, j) = v;
            jet.D3at(a, j, i, k) = v;
            jet.D3at(a, j, k, i) = v;
            jet.D3at(a, k, i, j) = v;
            jet.D3at(a, k, j, i) = v;
          }
        }
  }
  check_finite(jet.d1, "derivative");
  check_finite(jet.d2, "second derivative");
  check_finite(jet.d3, "third derivative");
  return jet;
}

}  // namespace detail

inline Jet evaluate_jet(const ImmersionMap& map, const ParamPoint& p,
                        int order, JetEngine engine = JetEngine::Exact) {
  if (order < 0 || order > 3)
    throw InvalidInputError("jet order must be in 0..3");
  const Chart& ch = detail::chart_of(map, p);
  const int m = map.target.real_dim();
  return engine == JetEngine::Exact
             ? detail::evaluate_jet_exact(ch, p.u, order, m)
             : detail::evaluate_jet_fd(ch, p.u, order, m);
}

// Max discrepancy between the two engines, normalized per derivative order
// by 1 + max |entry|; the independent-oracle gate for the exact engine.
inline double jet_cross_check(const ImmersionMap& map, const ParamPoint& p,
                              int order) {
  Jet je = evaluate_jet(map, p, order, JetEngine::Exact);
  Jet jf = evaluate_jet(map, p, order, JetEngine::Fd);
  auto block = [](const std::vector<double>& x, const std::vector<double>& y) {
    double scale = 1.0, diff = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      scale = std::max(scale, std::abs(x[i]));
      diff = std::max(diff, std::abs(x[i] - y[i]));
    }
    return diff / scale;
  };
  double r = block(je.value, jf.value);
  if (order >= 1) r = std::max(r, block(je.d1, jf.d1));
  if (order >= 2) r = std::max(r, block(je.d2, jf.d2));
  if (order >= 3) r = std::max(r, block(je.d3, jf.d3));
  return r;
}

}  // namespace laglab
