#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "laglab/ambient.hpp"
#include "laglab/dual.hpp"
#include "laglab/errors.hpp"
#include "laglab/jets.hpp"
#include "laglab/linalg.hpp"

// The example gallery: the closed-form immersions the library certifies,
// plus deterministic perturbation wrappers used as negative controls and
// as refinement-study targets.

namespace laglab {

// ---------------------------------------------------------------------------
// specs

struct WhitneyCn {
  int n = 2;
  double r = 1.0;
  std::vector<double> A;  // center, 2n entries; empty = origin
};

struct WhitneyCpn {
  int n = 2;
  double theta = 0.5;
  double c = 1.0;
};

struct FlatTorus {
  std::vector<double> radii;
};

struct FlatPlane {
  int n = 2;
};

using BaseSpec = std::variant<WhitneyCn, WhitneyCpn, FlatTorus, FlatPlane>;

struct Perturbed {
  BaseSpec base;
  double amplitude = 0.0;
  std::uint64_t seed = 0;
  // When set (flat-torus base only) the perturbation deforms each circle
  // factor inside its own complex line, so the image stays a product of
  // closed plane curves -- still Lagrangian, but with non-parallel second
  // fundamental form.  Otherwise bumps are applied along ambient normal
  // projections and the result is a (labeled) non-Lagrangian control.
  bool lagrangian_preserving = false;
};

using ExampleSpec =
    std::variant<WhitneyCn, WhitneyCpn, FlatTorus, FlatPlane, Perturbed>;

inline std::string spec_name(const ExampleSpec& spec);

namespace detail {

// Raw-bit uniform in [0,1): keeps streams identical across platforms and
// standard libraries (no std::distribution involved).
inline double unit_double(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline int uniform_index(std::mt19937_64& g, int bound) {
  int v = static_cast<int>(unit_double(g) * bound);
  return v >= bound ? bound - 1 : v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// chart evaluation functors (generic over the scalar type)

namespace detail {

// linear Lagrangian plane: the real-axis span of the first factor
struct FlatPlaneFn {
  int n;
  template <class T>
  std::vector<T> operator()(const std::vector<T>& u) const {
    std::vector<T> y(static_cast<size_t>(2) * n, T{});
    for (int k = 0; k < n; ++k) y[k] = u[k];
    return y;
  }
};

// product of circles z_k = r_k e^{i u_k}
struct FlatTorusFn {
  std::vector<double> radii;
  template <class T>
  std::vector<T> operator()(const std::vector<T>& u) const {
    const int n = static_cast<int>(radii.size());
    std::vector<T> y(static_cast<size_t>(2) * n);
    for (int k = 0; k < n; ++k) {
      y[k] = radii[k] * cos(u[k]);
      y[n + k] = radii[k] * sin(u[k]);
    }
    return y;
  }
};

// torus with each circle factor replaced by a seeded closed plane curve
// r_k(t) = radii_k + amplitude * sum_q c_{kq} cos(q t + phi_{kq})
struct CurvedTorusFn {
  std::vector<double> radii;
  double amplitude = 0.0;
  std::vector<double> coef;   // n x 2
  std::vector<double> phase;  // n x 2
  template <class T>
  std::vector<T> operator()(const std::vector<T>& u) const {
    const int n = static_cast<int>(radii.size());
    std::vector<T> y(static_cast<size_t>(2) * n);
    for (int k = 0; k < n; ++k) {
      T rk(radii[k]);
      for (int q = 1; q <= 2; ++q)
        rk += amplitude * coef[2 * k + q - 1] *
              cos(double(q) * u[k] + phase[2 * k + q - 1]);
      y[k] = rk * cos(u[k]);
      y[n + k] = rk * sin(u[k]);
    }
    return y;
  }
};

// stereographic chart of S^n with respect to the distinguished coordinate;
// sign +1 puts u=0 at the pole with distinguished coordinate +1.
template <class T>
void sphere_from_stereo(const std::vector<T>& u, int sign, T& x_dist,
                        std::vector<T>& x) {
  const int n = static_cast<int>(u.size());
  T uu{};
  for (int k = 0; k < n; ++k) uu += u[k] * u[k];
  T den = uu + 1.0;
  x_dist = double(sign) * (1.0 - uu) / den;
  x.resize(n);
  for (int k = 0; k < n; ++k) x[k] = 2.0 * u[k] / den;
}

struct WhitneyCnFn {
  int n;
  double r;
  std::vector<double> A;  // 2n entries
  int sign;               // stereographic pole selector
  template <class T>
  std::vector<T> operator()(const std::vector<T>& u) const {
    T x0;
    std::vector<T> x;
    sphere_from_stereo(u, sign, x0, x);
    T w = x0 * x0 + 1.0;
    std::vector<T> y(static_cast<size_t>(2) * n);
    for (int k = 0; k < n; ++k) {
      y[k] = r * x[k] / w + A[k];
      y[n + k] = r * x0 * x[k] / w + A[n + k];
    }
    return y;
  }
};

// Homogeneous coordinates of psi_theta on CP^n, as (re, im) pairs.
template <class T>
std::vector<std::array<T, 2>> whitney_cpn_homogeneous(double theta,
                                                      const std::vector<T>& x,
                                                      const T& xd) {
  const int n = static_cast<int>(x.size());
  const double ch = std::cosh(theta), sh = std::sinh(theta);
  std::vector<std::array<T, 2>> w(n + 1);
  // first n entries: x_k / (ch + i sh xd)
  T q = ch * ch + (sh * xd) * (sh * xd);
  for (int k = 0; k < n; ++k) {
    w[k][0] = x[k] * ch / q;
    w[k][1] = x[k] * (-sh) * xd / q;
  }
  // last entry: (sh ch (1 + xd^2) + i xd) / (ch^2 + sh^2 xd^2)
  w[n][0] = sh * ch * (xd * xd + 1.0) / q;
  w[n][1] = xd / q;
  return w;
}

template <class T>
int cpn_argmax_modulus(const std::vector<std::array<T, 2>>& w) {
  int best = 0;
  double bestv = -1.0;
  // strict improvement keeps the lowest index on exact ties
  for (int c = 0; c < static_cast<int>(w.size()); ++c) {
    double v = value(w[c][0]) * value(w[c][0]) +
               value(w[c][1]) * value(w[c][1]);
    if (v > bestv) {
      best = c;
      bestv = v;
    }
  }
  return best;
}

// divide out homogeneous coordinate `sel`, split real/imaginary parts
template <class T>
std::vector<T> cpn_affine(const std::vector<std::array<T, 2>>& w, int sel) {
  const int n = static_cast<int>(w.size()) - 1;
  T d2 = w[sel][0] * w[sel][0] + w[sel][1] * w[sel][1];
  std::vector<T> y(static_cast<size_t>(2) * n);
  int j = 0;
  for (int c = 0; c <= n; ++c) {
    if (c == sel) continue;
    // w_c / w_sel = w_c * conj(w_sel) / |w_sel|^2
    y[j] = (w[c][0] * w[sel][0] + w[c][1] * w[sel][1]) / d2;
    y[n + j] = (w[c][1] * w[sel][0] - w[c][0] * w[sel][1]) / d2;
    ++j;
  }
  return y;
}

struct WhitneyCpnFn {
  int n;
  double theta;
  int sign;

  template <class T>
  std::vector<T> eval(const std::vector<T>& u, int sel) const {
    T xd;
    std::vector<T> x;
    sphere_from_stereo(u, sign, xd, x);
    auto w = whitney_cpn_homogeneous(theta, x, xd);
    if (sel < 0) sel = cpn_argmax_modulus(w);
    return cpn_affine(w, sel);
  }

  int select_at(const std::vector<double>& u) const {
    double xd;
    std::vector<double> x;
    sphere_from_stereo(u, sign, xd, x);
    return cpn_argmax_modulus(whitney_cpn_homogeneous(theta, x, xd));
  }

  template <class T>
  std::vector<T> operator()(const std::vector<T>& u) const {
    return eval(u, -1);
  }
};

// Ambient-normal trigonometric bumps anchored to a global point function
// (sphere embedding coordinates / torus angles), so the perturbed map is
// well defined across charts.  Flat ambient only.
template <class BaseF, class AnchorF>
struct NormalBumpFn {
  BaseF base;
  AnchorF anchor;  // u -> global anchor tuple (dimension anchor_dim)
  int n = 0;       // parameter dimension
  int m = 0;       // ambient real dimension
  double amplitude = 0.0;
  std::vector<int> freq;      // Q x anchor_dim
  std::vector<double> phase;  // Q
  std::vector<int> axis;      // Q ambient axis indices
  int anchor_dim = 0;

  template <class T>
  std::vector<T> operator()(const std::vector<T>& u) const {
    std::vector<T> y = base(u);
    if (amplitude == 0.0) return y;
    // tangent basis of the base immersion (flat ambient inner product)
    using DT = Dual<T>;
    std::vector<std::vector<T>> t(n);
    for (int i = 0; i < n; ++i) {
      std::vector<DT> us(n);
      for (int a = 0; a < n; ++a) us[a] = DT(u[a], T(a == i ? 1.0 : 0.0));
      std::vector<DT> r = base(us);
      t[i].resize(m);
      for (int a = 0; a < m; ++a) t[i][a] = r[a].b;
    }
    Matrix<T> g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        T s{};
        for (int a = 0; a < m; ++a) s += t[i][a] * t[j][a];
        g(i, j) = s;
      }
    Matrix<T> gi = inverse(g);
    std::vector<T> xi = anchor(u);
    const int Q = static_cast<int>(phase.size());
    for (int qq = 0; qq < Q; ++qq) {
      T arg(phase[qq]);
      for (int a = 0; a < anchor_dim; ++a)
        arg += double(freq[qq * anchor_dim + a]) * xi[a];
      T bump = amplitude * cos(arg);
      // project the ambient axis onto the normal space of the base
      std::vector<T> E(m, T{});
      E[axis[qq]] = T(1.0);
      std::vector<T> dot(n);
      for (int i = 0; i < n; ++i) dot[i] = t[i][axis[qq]];
      for (int j = 0; j < n; ++j) {
        T cj{};
        for (int i = 0; i < n; ++i) cj += gi(i, j) * dot[i];
        for (int a = 0; a < m; ++a) E[a] -= cj * t[j][a];
      }
      for (int a = 0; a < m; ++a) y[a] += bump * E[a];
    }
    return y;
  }
};

struct IdentityAnchor {
  template <class T>
  std::vector<T> operator()(const std::vector<T>& u) const {
    return u;
  }
};

struct SphereAnchor {
  int sign;
  template <class T>
  std::vector<T> operator()(const std::vector<T>& u) const {
    T xd;
    std::vector<T> x;
    sphere_from_stereo(u, sign, xd, x);
    std::vector<T> out;
    out.reserve(x.size() + 1);
    out.push_back(xd);
    for (auto& v : x) out.push_back(std::move(v));
    return out;
  }
};

inline bool inside_unit_ball(const std::vector<double>& u, bool closed) {
  double s = 0.0;
  for (double v : u) s += v * v;
  return closed ? s <= 1.0 : s < 1.0;
}

inline Box cube(int n, double half) {
  Box b;
  b.lo.assign(n, -half);
  b.hi.assign(n, half);
  return b;
}

// Two stereographic charts; the integration region splits the sphere at
// the equator (chart 0 takes the closed hemisphere, chart 1 the open one).
// The 0.25 collar past the unit ball gives finite-difference stencils and
// cross-chart comparisons room without ever nearing the far pole.
template <class F>
void add_sphere_charts(ImmersionMap& map, int n, F&& make_fn) {
  for (int chart = 0; chart < 2; ++chart) {
    Chart ch = make_fn(chart == 0 ? +1 : -1);
    ch.domain = cube(n, 1.25);
    ch.periodic.assign(n, 0);
    ch.period.assign(n, 0.0);
    bool closed = chart == 0;
    ch.in_region = [closed](const std::vector<double>& u) {
      return inside_unit_ball(u, closed);
    };
    map.atlas.push_back(std::move(ch));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// validation

inline void validate_spec(const ExampleSpec& spec);

namespace detail {

inline void validate_base(const BaseSpec& base) {
  std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, WhitneyCn>) {
          if (s.n < 1) throw ConfigError("whitney-cn: n must be >= 1");
          if (!(s.r > 0.0)) throw ConfigError("whitney-cn: r must be > 0");
          if (!s.A.empty() && static_cast<int>(s.A.size()) != 2 * s.n)
            throw ConfigError("whitney-cn: center must have 2n entries");
          for (double a : s.A)
            if (!std::isfinite(a))
              throw ConfigError("whitney-cn: center entries must be finite");
        } else if constexpr (std::is_same_v<S, WhitneyCpn>) {
          if (s.n < 1) throw ConfigError("whitney-cpn: n must be >= 1");
          if (!(s.theta > 0.0))
            throw ConfigError("whitney-cpn: theta must be > 0");
          if (!(s.c > 0.0)) throw ConfigError("whitney-cpn: c must be > 0");
        } else if constexpr (std::is_same_v<S, FlatTorus>) {
          if (s.radii.empty())
            throw ConfigError("flat-torus: radii must be non-empty");
          for (double r : s.radii)
            if (!(r > 0.0))
              throw ConfigError("flat-torus: radii must be positive");
        } else {
          if (s.n < 1) throw ConfigError("flat-plane: n must be >= 1");
        }
      },
      base);
}

}  // namespace detail

namespace detail {

// precondition: spec is not the perturbed alternative
inline BaseSpec to_base(const ExampleSpec& spec) {
  return std::visit(
      [](const auto& s) -> BaseSpec {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Perturbed>)
          throw InvalidInputError("perturbed spec where a base was expected");
        else
          return BaseSpec(s);
      },
      spec);
}

}  // namespace detail

inline void validate_spec(const ExampleSpec& spec) {
  if (const auto* p = std::get_if<Perturbed>(&spec)) {
    detail::validate_base(p->base);
    if (!(p->amplitude >= 0.0) || !std::isfinite(p->amplitude))
      throw ConfigError("perturbed: amplitude must be >= 0");
    if (std::holds_alternative<WhitneyCpn>(p->base))
      throw ConfigError("perturbed: only flat-ambient bases are supported");
    if (p->lagrangian_preserving) {
      const auto* t = std::get_if<FlatTorus>(&p->base);
      if (!t)
        throw ConfigError(
            "perturbed: lagrangian_preserving requires a flat-torus base");
      double rmin = t->radii[0];
      for (double r : t->radii) rmin = std::min(rmin, r);
      if (!(p->amplitude < 0.5 * rmin))
        throw ConfigError(
            "perturbed: amplitude too large for an embedded curved torus");
    }
  } else {
    detail::validate_base(detail::to_base(spec));
  }
}

// ---------------------------------------------------------------------------
// construction

namespace detail {

inline ImmersionMap make_base_immersion(const BaseSpec& base) {
  ImmersionMap map;
  std::visit(
      [&map](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, FlatPlane>) {
          map.n = s.n;
          map.target = AmbientModel::flat(s.n);
          map.name = "flat-plane n=" + std::to_string(s.n);
          map.closed = false;
          Chart ch = Chart::make(cube(s.n, 2.0), FlatPlaneFn{s.n});
          map.atlas.push_back(std::move(ch));
        } else if constexpr (std::is_same_v<S, FlatTorus>) {
          const int n = static_cast<int>(s.radii.size());
          map.n = n;
          map.target = AmbientModel::flat(n);
          map.name = "flat-torus n=" + std::to_string(n);
          Box box;
          box.lo.assign(n, 0.0);
          box.hi.assign(n, 2.0 * kPi);
          Chart ch = Chart::make(std::move(box), FlatTorusFn{s.radii});
          ch.periodic.assign(n, 1);
          ch.period.assign(n, 2.0 * kPi);
          map.atlas.push_back(std::move(ch));
        } else if constexpr (std::is_same_v<S, WhitneyCn>) {
          map.n = s.n;
          map.target = AmbientModel::flat(s.n);
          map.name = "whitney-cn n=" + std::to_string(s.n);
          std::vector<double> A = s.A;
          if (A.empty()) A.assign(static_cast<size_t>(2) * s.n, 0.0);
          add_sphere_charts(map, s.n, [&](int sign) {
            return Chart::make(cube(s.n, 1.25),
                               WhitneyCnFn{s.n, s.r, A, sign});
          });
        } else {
          map.n = s.n;
          map.target = AmbientModel::fubini_study(s.n, s.c, 0);
          map.name = "whitney-cpn n=" + std::to_string(s.n);
          add_sphere_charts(map, s.n, [&](int sign) {
            WhitneyCpnFn fn{s.n, s.theta, sign};
            Chart ch = Chart::make(cube(s.n, 1.25), fn);
            // freeze the affine-chart selection at the reference point so
            // finite-difference stencils stay on one smooth branch
            ch.f0_ref = [fn](const std::vector<double>& u,
                             const std::vector<double>& ref) {
              return fn.eval(u, fn.select_at(ref));
            };
            return ch;
          });
        }
      },
      base);
  return map;
}

template <class BaseF, class AnchorF>
Chart make_bump_chart(const Chart& proto, BaseF base_fn, AnchorF anchor_fn,
                      int n, int m, int anchor_dim, double amplitude,
                      std::mt19937_64& rng) {
  NormalBumpFn<BaseF, AnchorF> fn;
  fn.base = std::move(base_fn);
  fn.anchor = std::move(anchor_fn);
  fn.n = n;
  fn.m = m;
  fn.amplitude = amplitude;
  fn.anchor_dim = anchor_dim;
  const int Q = 4;
  for (int q = 0; q < Q; ++q) {
    bool nonzero = false;
    for (int a = 0; a < anchor_dim; ++a) {
      int k = uniform_index(rng, 5) - 2;  // frequencies in -2..2
      fn.freq.push_back(k);
      nonzero = nonzero || k != 0;
    }
    if (!nonzero) fn.freq[static_cast<size_t>(q) * anchor_dim] = 1;
    fn.phase.push_back(2.0 * kPi * unit_double(rng));
    fn.axis.push_back(uniform_index(rng, m));
  }
  Chart ch = Chart::make(proto.domain, std::move(fn));
  ch.periodic = proto.periodic;
  ch.period = proto.period;
  ch.in_region = proto.in_region;
  return ch;
}

}  // namespace detail

inline ImmersionMap make_immersion(const ExampleSpec& spec) {
  validate_spec(spec);
  if (const auto* p = std::get_if<Perturbed>(&spec)) {
    ImmersionMap base_map = detail::make_base_immersion(p->base);
    ImmersionMap map;
    map.n = base_map.n;
    map.target = base_map.target;
    map.closed = base_map.closed;
    map.conformal_maslov = false;
    std::mt19937_64 rng(p->seed);

    if (p->lagrangian_preserving) {
      const auto& torus = std::get<FlatTorus>(p->base);
      const int n = map.n;
      detail::CurvedTorusFn fn;
      fn.radii = torus.radii;
      fn.amplitude = p->amplitude;
      fn.coef.resize(static_cast<size_t>(2) * n);
      fn.phase.resize(static_cast<size_t>(2) * n);
      for (int k = 0; k < 2 * n; ++k) {
        fn.coef[k] = detail::unit_double(rng) - 0.5;
        fn.phase[k] = 2.0 * kPi * detail::unit_double(rng);
      }
      Chart ch = Chart::make(base_map.atlas[0].domain, fn);
      ch.periodic = base_map.atlas[0].periodic;
      ch.period = base_map.atlas[0].period;
      map.lagrangian = true;
      map.name = "curved-torus amp=" + std::to_string(p->amplitude);
      map.atlas.push_back(std::move(ch));
      return map;
    }

    map.lagrangian = false;
    map.name = "perturbed(" + base_map.name +
               ") amp=" + std::to_string(p->amplitude);
    const int n = map.n, m = map.target.real_dim();
    std::visit(
        [&](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, FlatPlane>) {
            map.atlas.push_back(detail::make_bump_chart(
                base_map.atlas[0], detail::FlatPlaneFn{s.n},
                detail::IdentityAnchor{}, n, m, n, p->amplitude, rng));
          } else if constexpr (std::is_same_v<S, FlatTorus>) {
            map.atlas.push_back(detail::make_bump_chart(
                base_map.atlas[0], detail::FlatTorusFn{s.radii},
                detail::IdentityAnchor{}, n, m, n, p->amplitude, rng));
          } else if constexpr (std::is_same_v<S, WhitneyCn>) {
            std::vector<double> A = s.A;
            if (A.empty()) A.assign(static_cast<size_t>(2) * s.n, 0.0);
            // one bump set shared by both charts: draw once, reuse
            std::mt19937_64 saved = rng;
            for (int chart = 0; chart < 2; ++chart) {
              std::mt19937_64 local = saved;
              int sign = chart == 0 ? +1 : -1;
              map.atlas.push_back(detail::make_bump_chart(
                  base_map.atlas[chart],
                  detail::WhitneyCnFn{s.n, s.r, A, sign},
                  detail::SphereAnchor{sign}, n, m, n + 1, p->amplitude,
                  local));
            }
          } else {
            throw ConfigError(
                "perturbed: only flat-ambient bases are supported");
          }
        },
        p->base);
    return map;
  }
  return detail::make_base_immersion(detail::to_base(spec));
}

// ---------------------------------------------------------------------------
// closed-form expectations

struct ExpectedInvariants {
  bool any = false;
  std::optional<double> h_norm2;  // constant over the manifold
  std::optional<double> H_norm2;
  std::optional<double> B_norm2;
  bool b_vanishes = false;        // pointwise B = 0
  bool whitney_relation = false;  // pointwise ||h||^2 = 3n^2/(n+2) |H|^2
};

inline ExpectedInvariants expected_invariants(const ExampleSpec& spec) {
  ExpectedInvariants e;
  if (std::holds_alternative<Perturbed>(spec)) return e;
  if (const auto* t = std::get_if<FlatTorus>(&spec)) {
    const int n = static_cast<int>(t->radii.size());
    double S = 0.0;
    for (double r : t->radii) S += 1.0 / (r * r);
    e.any = true;
    e.h_norm2 = S;
    e.H_norm2 = S / double(n * n);
    e.B_norm2 = double(n - 1) * S / double(n + 2);
    return e;
  }
  if (std::holds_alternative<FlatPlane>(spec)) {
    e.any = true;
    e.h_norm2 = 0.0;
    e.H_norm2 = 0.0;
    e.B_norm2 = 0.0;
    e.b_vanishes = true;
    return e;
  }
  // both Whitney families
  e.any = true;
  e.B_norm2 = 0.0;
  e.b_vanishes = true;
  e.whitney_relation = true;
  return e;
}

inline std::string spec_name(const ExampleSpec& spec) {
  if (const auto* p = std::get_if<Perturbed>(&spec)) {
    std::string base = std::visit(
        [](const auto& s) { return spec_name(ExampleSpec(s)); }, p->base);
    return "perturbed(" + base + ")";
  }
  if (std::holds_alternative<WhitneyCn>(spec)) return "whitney-cn";
  if (std::holds_alternative<WhitneyCpn>(spec)) return "whitney-cpn";
  if (std::holds_alternative<FlatTorus>(spec)) return "flat-torus";
  return "flat-plane";
}

// ---------------------------------------------------------------------------
// test/debug helper: psi_theta at an explicit sphere point, double precision

struct WhitneyCpnPoint {
  std::vector<std::array<double, 2>> homogeneous;  // n+1 complex entries
  int fs_chart = 0;       // affine chart selected (divided coordinate)
  std::vector<double> y;  // 2n affine chart coordinates, split re/im
};

inline WhitneyCpnPoint whitney_cpn_point(double theta,
                                         const std::vector<double>& x_sphere) {
  if (x_sphere.size() < 2)
    throw InvalidInputError("whitney_cpn_point needs n+1 sphere coordinates");
  double s = 0.0;
  for (double v : x_sphere) s += v * v;
  if (std::abs(s - 1.0) > 1e-8)
    throw InvalidInputError("whitney_cpn_point: coordinates must lie on S^n");
  std::vector<double> x(x_sphere.begin(), x_sphere.end() - 1);
  double xd = x_sphere.back();
  WhitneyCpnPoint out;
  out.homogeneous = detail::whitney_cpn_homogeneous(theta, x, xd);
  out.fs_chart = detail::cpn_argmax_modulus(out.homogeneous);
  out.y = detail::cpn_affine(out.homogeneous, out.fs_chart);
  return out;
}

}  // namespace laglab
