#pragma once
// Grid-level calculus over a whole immersed submanifold: structured sample
// grids with quadrature weights, covariant derivatives of the frame tensor
// fields, the conformal-vector-field check for JH, Codazzi-type symmetry
// residuals, a conservative Laplace-Beltrami stencil, quadrature, a
// Simons-type curvature diagnostic, and the pinching verdict.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "laglab/geometry.hpp"

namespace laglab {

// ---------------------------------------------------------------------------
// Sample grids
// ---------------------------------------------------------------------------

// One lattice node of a structured per-chart product grid.  Nodes outside the
// chart's integration region carry weight zero; they are still evaluated so
// that finite-difference stencils centered on region nodes have neighbors.
struct GridNode {
  int chart = 0;                 // index into ImmersionMap::atlas
  std::vector<int> idx;          // lattice index per axis
  std::vector<double> u;         // parameter coordinates
  double weight = 0.0;           // quadrature weight (> 0 inside the region)
  bool in_region = false;        // counted in sups / means / integrals
  double sqrt_det_g = 0.0;       // area element of the induced metric
  Matrix<double> g_inv;          // inverse induced metric (for divergences)
};

// Lattice layout of one chart: axis resolutions, spacings, and the offset of
// the chart's nodes inside SampleGrid::nodes (row-major over axes).
struct ChartGrid {
  int chart_id = 0;
  std::vector<int> dims;
  std::vector<double> lo;
  std::vector<double> step;
  std::vector<std::uint8_t> periodic;
  std::size_t offset = 0;
  std::size_t count = 0;
};

struct SampleGrid {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  int n = 0;
  std::vector<ChartGrid> charts;
  std::vector<GridNode> nodes;
  std::size_t region_count = 0;

  // Flat index of the lattice neighbor `off` steps along `axis`, or npos if
  // it falls outside a non-periodic axis range.  Periodic axes wrap.
  std::size_t neighbor(std::size_t node, int axis, int off) const {
    const GridNode& p = nodes[node];
    const ChartGrid& cg = charts[static_cast<std::size_t>(p.chart)];
    const int d = static_cast<int>(cg.dims.size());
    std::size_t flat = 0;
    for (int a = 0; a < d; ++a) {
      int ia = p.idx[a];
      if (a == axis) {
        ia += off;
        if (cg.periodic[a]) {
          ia = ((ia % cg.dims[a]) + cg.dims[a]) % cg.dims[a];
        } else if (ia < 0 || ia >= cg.dims[a]) {
          return npos;
        }
      }
      flat = flat * static_cast<std::size_t>(cg.dims[a]) +
             static_cast<std::size_t>(ia);
    }
    return cg.offset + flat;
  }

  // True when the node has lattice neighbors at every offset 1..radius in
  // both directions along every axis.
  bool has_stencil(std::size_t node, int radius) const {
    for (int a = 0; a < n; ++a)
      for (int r = 1; r <= radius; ++r)
        if (neighbor(node, a, r) == npos || neighbor(node, a, -r) == npos)
          return false;
    return true;
  }
};

namespace detail {

inline std::string node_location(const GridNode& p) {
  std::ostringstream os;
  os << "chart " << p.chart << ", node (";
  for (std::size_t k = 0; k < p.idx.size(); ++k)
    os << (k ? "," : "") << p.idx[k];
  os << "), u = (";
  for (std::size_t k = 0; k < p.u.size(); ++k)
    os << (k ? "," : "") << p.u[k];
  os << ")";
  return os.str();
}

}  // namespace detail

// Builds per-chart product grids with `resolution` points per axis.
// Periodic axes use uniform spacing period/resolution (no duplicated seam
// point); other axes use trapezoidal end weights.  Each node's quadrature
// weight is the product rule weight times sqrt(det g) times the region
// indicator of its chart, so summing weights approximates the volume of the
// covered region without double counting across charts.
inline SampleGrid build_grid(const ImmersionMap& map, int resolution) {
  if (resolution < 8) {
    std::ostringstream os;
    os << "grid resolution must be at least 8 per axis (got " << resolution
       << ")";
    throw ConfigError(os.str());
  }
  const AmbientModel& model = map.target;
  SampleGrid grid;
  grid.n = map.n;

  for (std::size_t ci = 0; ci < map.atlas.size(); ++ci) {
    const Chart& chart = map.atlas[ci];
    const int d = chart.domain.dim();
    ChartGrid cg;
    cg.chart_id = static_cast<int>(ci);
    cg.offset = grid.nodes.size();
    cg.periodic.assign(chart.periodic.begin(), chart.periodic.end());
    cg.dims.assign(d, resolution);
    cg.lo.resize(d);
    cg.step.resize(d);
    for (int a = 0; a < d; ++a) {
      cg.lo[a] = chart.domain.lo[a];
      cg.step[a] = chart.periodic[a]
                       ? chart.period[a] / resolution
                       : (chart.domain.hi[a] - chart.domain.lo[a]) /
                             (resolution - 1);
    }
    cg.count = 1;
    for (int a = 0; a < d; ++a) cg.count *= static_cast<std::size_t>(resolution);

    double cell = 1.0;
    for (int a = 0; a < d; ++a) cell *= cg.step[a];

    std::vector<int> idx(d, 0);
    std::vector<double> u(d);
    for (std::size_t flat = 0; flat < cg.count; ++flat) {
      double trap = 1.0;
      for (int a = 0; a < d; ++a) {
        u[a] = cg.lo[a] + idx[a] * cg.step[a];
        if (!cg.periodic[a] && (idx[a] == 0 || idx[a] == cg.dims[a] - 1))
          trap *= 0.5;
      }
      GridNode node;
      node.chart = static_cast<int>(ci);
      node.idx = idx;
      node.u = u;
      node.in_region = chart.in_region(u);

      Matrix<double> g = induced_metric_at<double>(model, chart, u);
      const double det = determinant(g);
      if (!(det > 0.0) || std::sqrt(det) < 1e-12)
        throw DegenerateImmersionError(
            "degenerate induced metric on the sample grid at " +
            detail::node_location(node));
      try {
        node.g_inv = inverse(g);
      } catch (const NumericalError&) {
        throw DegenerateImmersionError(
            "singular induced metric on the sample grid at " +
            detail::node_location(node));
      }
      node.sqrt_det_g = std::sqrt(det);
      node.weight = node.in_region ? trap * cell * node.sqrt_det_g : 0.0;
      grid.region_count += node.in_region ? 1 : 0;
      grid.nodes.push_back(std::move(node));

      for (int a = d - 1; a >= 0; --a) {
        if (++idx[a] < cg.dims[a]) break;
        idx[a] = 0;
      }
    }
    grid.charts.push_back(std::move(cg));
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Pointwise connection data
// ---------------------------------------------------------------------------

namespace detail {

// Frame components of the trace-adjusted part of h (the umbilic profile
// subtracted), computed directly from a geometry core.
inline Tensor3<double> traceless_part(const GeomCore<double>& core) {
  const int n = core.n;
  const double w = static_cast<double>(n) / (n + 2);
  Tensor3<double> b(n, n, n);
  for (int m_ = 0; m_ < n; ++m_)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        b(m_, i, j) = core.h(m_, i, j) -
                      w * (core.Hstar[m_] * (i == j ? 1.0 : 0.0) +
                           core.Hstar[i] * (j == m_ ? 1.0 : 0.0) +
                           core.Hstar[j] * (i == m_ ? 1.0 : 0.0));
  return b;
}

// Normalized pairing defect of the ambient 2-form on coordinate tangents,
// sup over i<j of |omega(d1_i, d1_j)| / (|d1_i| |d1_j|).
inline double pairing_defect(const AmbientModel& model,
                             const GeomCore<double>& core) {
  const int n = core.n, m = core.m;
  Matrix<double> w = kahler_form_at<double>(model, core.psi);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double pair = 0.0, ni = 0.0, nj = 0.0;
      for (int a = 0; a < m; ++a) {
        ni += core.D1at(a, i) * core.D1at(a, i);
        nj += core.D1at(a, j) * core.D1at(a, j);
        for (int b = 0; b < m; ++b)
          pair += core.D1at(a, i) * w(a, b) * core.D1at(b, j);
      }
      worst = std::max(worst, std::abs(pair) / std::sqrt(ni * nj));
    }
  }
  return worst;
}

// Connection data at one parameter point: the coordinate-to-frame matrix, the
// frame connection coefficients omega^k_i(e_l), the covariant derivative of
// the tangent field JH, and two pointwise diagnostics derived from them.
// All derivatives are exact (dual-number seeded), not grid differences.
struct ConnData {
  Matrix<double> C;        // e_l = sum_a C(a, l) dpsi_a
  Tensor3<double> omega;   // omega(k, i, l) = <D_{e_l} e_i, e_k>
  Matrix<double> dV;       // (m, l) entry: <D_{e_l} JH, e_m>
  double maslov_defect = 0.0;
  double equivalence_residual = 0.0;
};

inline ConnData connection_at(const AmbientModel& model, const Chart& chart,
                              const std::vector<double>& u) {
  const int n = static_cast<int>(u.size());
  const int m = model.real_dim();
  GeomCore<double> core = eval_geom_core<double>(model, chart, u);
  Tensor3<double> gam = christoffels_at(model, core.psi);

  // Coordinate-axis derivatives of the frame, of h, and of H^{m*}.
  std::vector<std::vector<double>> de(n);      // de[al][i*m + a]
  std::vector<Tensor3<double>> dh(n);          // dh[al](m, i, j)
  std::vector<std::vector<double>> dHs(n);     // dHs[al][m]
  for (int al = 0; al < n; ++al) {
    std::vector<D1> us(n);
    for (int a = 0; a < n; ++a) us[a] = D1(u[a], a == al ? 1.0 : 0.0);
    GeomCore<D1> cd = eval_geom_core<D1>(model, chart, us);
    de[al].resize(static_cast<std::size_t>(n) * m);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < m; ++a)
        de[al][static_cast<std::size_t>(i) * m + a] =
            cd.e[static_cast<std::size_t>(i) * m + a].b;
    dh[al] = Tensor3<double>(n, n, n);
    for (int m_ = 0; m_ < n; ++m_)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dh[al](m_, i, j) = cd.h(m_, i, j).b;
    dHs[al].resize(n);
    for (int m_ = 0; m_ < n; ++m_) dHs[al][m_] = cd.Hstar[m_].b;
  }

  ConnData out;
  out.C = core.C;

  // P[al](i, k) = <d_al e_i + Gamma~(e_i, d1_al), e_k>_G
  std::vector<Matrix<double>> P(n);
  std::vector<double> w(m);
  for (int al = 0; al < n; ++al) {
    P[al] = Matrix<double>(n, n);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < m; ++a) {
        double s = de[al][static_cast<std::size_t>(i) * m + a];
        for (int b = 0; b < m; ++b)
          for (int c = 0; c < m; ++c)
            s += gam(a, b, c) * core.e[static_cast<std::size_t>(i) * m + b] *
                 core.D1at(c, al);
        w[a] = s;
      }
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b)
            s += w[a] * core.G(a, b) *
                 core.e[static_cast<std::size_t>(k) * m + b];
        P[al](i, k) = s;
      }
    }
  }

  out.omega = Tensor3<double>(n, n, n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < n; ++l) {
        double s = 0.0;
        for (int al = 0; al < n; ++al) s += core.C(al, l) * P[al](i, k);
        out.omega(k, i, l) = s;
      }

  // V = JH in frame components is V^m = -H^{m*}; its covariant derivative is
  // dV(m, l) = e_l(V^m) + sum_k omega(m, k, l) V^k.
  std::vector<double> V(n);
  for (int m_ = 0; m_ < n; ++m_) V[m_] = -core.Hstar[m_];
  out.dV = Matrix<double>(n, n);
  for (int m_ = 0; m_ < n; ++m_)
    for (int l = 0; l < n; ++l) {
      double s = 0.0;
      for (int al = 0; al < n; ++al) s += core.C(al, l) * (-dHs[al][m_]);
      for (int k = 0; k < n; ++k) s += out.omega(m_, k, l) * V[k];
      out.dV(m_, l) = s;
    }

  double div = 0.0;
  for (int m_ = 0; m_ < n; ++m_) div += out.dV(m_, m_);
  for (int m_ = 0; m_ < n; ++m_)
    for (int l = 0; l < n; ++l)
      out.maslov_defect =
          std::max(out.maslov_defect,
                   std::abs(out.dV(m_, l) - (m_ == l ? div / n : 0.0)));

  // Independent route to the same endomorphism: contracting the covariant
  // derivative of h over its first two slots must give -n times dV.
  for (int m_ = 0; m_ < n; ++m_)
    for (int l = 0; l < n; ++l) {
      double T = 0.0;
      for (int k = 0; k < n; ++k) {
        double hc = 0.0;
        for (int al = 0; al < n; ++al) hc += core.C(al, l) * dh[al](m_, k, k);
        for (int r = 0; r < n; ++r) {
          hc -= out.omega(r, k, l) * core.h(m_, r, k);
          hc -= out.omega(r, k, l) * core.h(m_, k, r);
          hc += out.omega(m_, r, l) * core.h(r, k, k);
        }
        T += hc;
      }
      out.equivalence_residual =
          std::max(out.equivalence_residual, std::abs(T + n * out.dV(m_, l)));
    }
  return out;
}

inline int min_axis_resolution(const SampleGrid& grid) {
  int r = std::numeric_limits<int>::max();
  for (const ChartGrid& cg : grid.charts)
    for (int d : cg.dims) r = std::min(r, d);
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Conformal check for JH
// ---------------------------------------------------------------------------

struct MaslovCheck {
  double sup_defect = 0.0;            // sup | grad(JH) - (div JH / n) Id |
  double equivalence_residual = 0.0;  // two formulations of the same check
  std::string warning;                // non-empty on coarse grids
};

// JH is a conformal vector field iff its covariant derivative is a multiple
// of the identity at every point.  Both returned numbers are sups over the
// region nodes; the derivative itself is computed pointwise exactly, so the
// result does not depend on grid spacing (the grid only selects the points).
inline MaslovCheck maslov_conformal_defect(const ImmersionMap& map,
                                           const AmbientModel& model,
                                           const SampleGrid& grid) {
  MaslovCheck out;
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const GridNode& p = grid.nodes[i];
    if (!p.in_region) continue;
    detail::ConnData conn = detail::connection_at(
        model, map.atlas[static_cast<std::size_t>(p.chart)], p.u);
    out.sup_defect = std::max(out.sup_defect, conn.maslov_defect);
    out.equivalence_residual =
        std::max(out.equivalence_residual, conn.equivalence_residual);
  }
  if (detail::min_axis_resolution(grid) < 16)
    out.warning = "grid resolution below 16: sups sample few points";
  return out;
}

// ---------------------------------------------------------------------------
// Codazzi-type symmetry residual
// ---------------------------------------------------------------------------

// Which symmetric 3-tensor field to differentiate.
enum class TensorPart { full, traceless };

// Sup over stencil-complete region nodes of the antisymmetry of the covariant
// derivative of the chosen tensor field in its last two indices.  The frame
// components are differentiated along grid axes with 4th-order centered
// stencils; the connection correction terms are evaluated pointwise exactly.
inline double codazzi_residual(const ImmersionMap& map,
                               const AmbientModel& model,
                               const SampleGrid& grid, TensorPart part) {
  const int n = grid.n;

  // Phase 1: tensor field at every lattice node (region and collar).
  std::vector<Tensor3<double>> field(grid.nodes.size());
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const GridNode& p = grid.nodes[i];
    try {
      GeomCore<double> core = eval_geom_core<double>(
          model, map.atlas[static_cast<std::size_t>(p.chart)], p.u);
      field[i] =
          part == TensorPart::full ? core.h : detail::traceless_part(core);
    } catch (const DegenerateImmersionError& e) {
      throw DegenerateImmersionError(std::string(e.what()) + " at " +
                                     detail::node_location(p));
    }
  }

  // Phase 2: covariant derivative at nodes with full radius-2 stencils.
  double sup = 0.0;
  std::size_t covered = 0;
  std::vector<Tensor3<double>> dfield(n);
  Tensor3<double> hc;
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const GridNode& p = grid.nodes[i];
    if (!p.in_region || !grid.has_stencil(i, 2)) continue;
    ++covered;
    const ChartGrid& cg = grid.charts[static_cast<std::size_t>(p.chart)];
    detail::ConnData conn = detail::connection_at(
        model, map.atlas[static_cast<std::size_t>(p.chart)], p.u);
    const Tensor3<double>& f0 = field[i];

    for (int al = 0; al < n; ++al) {
      const Tensor3<double>& fp1 = field[grid.neighbor(i, al, 1)];
      const Tensor3<double>& fm1 = field[grid.neighbor(i, al, -1)];
      const Tensor3<double>& fp2 = field[grid.neighbor(i, al, 2)];
      const Tensor3<double>& fm2 = field[grid.neighbor(i, al, -2)];
      dfield[al] = Tensor3<double>(n, n, n);
      const double inv12h = 1.0 / (12.0 * cg.step[al]);
      for (std::size_t t = 0; t < dfield[al].a.size(); ++t)
        dfield[al].a[t] = (-fp2.a[t] + 8.0 * fp1.a[t] - 8.0 * fm1.a[t] +
                           fm2.a[t]) *
                          inv12h;
    }

    // hc(m, i, j)[l] assembled per derivative direction l.
    for (int l = 0; l < n; ++l) {
      hc = Tensor3<double>(n, n, n);
      for (int m_ = 0; m_ < n; ++m_)
        for (int ii = 0; ii < n; ++ii)
          for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int al = 0; al < n; ++al)
              s += conn.C(al, l) * dfield[al](m_, ii, j);
            for (int k = 0; k < n; ++k) {
              s -= conn.omega(k, ii, l) * f0(m_, k, j);
              s -= conn.omega(k, j, l) * f0(m_, ii, k);
              s += conn.omega(m_, k, l) * f0(k, ii, j);
            }
            hc(m_, ii, j) = s;
          }
      // Compare with the derivative taken in direction j, slot l: build the
      // companion tensor on the fly by swapping the roles of j and l.
      for (int m_ = 0; m_ < n; ++m_)
        for (int ii = 0; ii < n; ++ii)
          for (int j = 0; j < l; ++j) {
            double s = 0.0;
            for (int al = 0; al < n; ++al)
              s += conn.C(al, j) * dfield[al](m_, ii, l);
            for (int k = 0; k < n; ++k) {
              s -= conn.omega(k, ii, j) * f0(m_, k, l);
              s -= conn.omega(k, l, j) * f0(m_, ii, k);
              s += conn.omega(m_, k, j) * f0(k, ii, l);
            }
            sup = std::max(sup, std::abs(hc(m_, ii, j) - s));
          }
    }
  }
  if (covered == 0)
    throw ConfigError(
        "no region node has a complete radius-2 stencil; increase the grid "
        "resolution");
  return sup;
}

// ---------------------------------------------------------------------------
// Laplace-Beltrami, quadrature
// ---------------------------------------------------------------------------

// Conservative discrete Laplacian: Delta f = (1/sqrt g) D_i(sqrt g g^{ij} D_j f)
// with centered first differences for both divergence and gradient.  Nodes
// whose stencil is incomplete (or touches an incomplete flux node) get NaN and
// are skipped by integrate() and by sup-style aggregations downstream.
inline std::vector<double> laplace_beltrami(const SampleGrid& grid,
                                            const std::vector<double>& f) {
  if (f.size() != grid.nodes.size())
    throw InvalidInputError(
        "laplace_beltrami: field size does not match the grid");
  const int n = grid.n;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // Flux field W(node, j) = sqrt(det g) sum_a g^{ja} D_a f.
  Matrix<double> W(static_cast<int>(grid.nodes.size()), n);
  std::vector<std::uint8_t> w_ok(grid.nodes.size(), 0);
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const GridNode& p = grid.nodes[i];
    const ChartGrid& cg = grid.charts[static_cast<std::size_t>(p.chart)];
    bool ok = true;
    std::vector<double> df(n, 0.0);
    for (int a = 0; a < n && ok; ++a) {
      const std::size_t ip = grid.neighbor(i, a, 1);
      const std::size_t im = grid.neighbor(i, a, -1);
      if (ip == SampleGrid::npos || im == SampleGrid::npos ||
          !std::isfinite(f[ip]) || !std::isfinite(f[im])) {
        ok = false;
        break;
      }
      df[a] = (f[ip] - f[im]) / (2.0 * cg.step[a]);
    }
    if (!ok) continue;
    w_ok[i] = 1;
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int a = 0; a < n; ++a) s += p.g_inv(j, a) * df[a];
      W(static_cast<int>(i), j) = p.sqrt_det_g * s;
    }
  }

  std::vector<double> out(grid.nodes.size(), nan);
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const GridNode& p = grid.nodes[i];
    const ChartGrid& cg = grid.charts[static_cast<std::size_t>(p.chart)];
    double div = 0.0;
    bool ok = true;
    for (int j = 0; j < n && ok; ++j) {
      const std::size_t ip = grid.neighbor(i, j, 1);
      const std::size_t im = grid.neighbor(i, j, -1);
      if (ip == SampleGrid::npos || im == SampleGrid::npos || !w_ok[ip] ||
          !w_ok[im]) {
        ok = false;
        break;
      }
      div += (W(static_cast<int>(ip), j) - W(static_cast<int>(im), j)) /
             (2.0 * cg.step[j]);
    }
    if (ok) out[i] = div / p.sqrt_det_g;
  }
  return out;
}

// Weighted sum of f over region nodes; non-finite samples are skipped (they
// mark stencil-incomplete points).
inline double integrate(const SampleGrid& grid, const std::vector<double>& f) {
  if (f.size() != grid.nodes.size())
    throw InvalidInputError("integrate: field size does not match the grid");
  double s = 0.0;
  for (std::size_t i = 0; i < grid.nodes.size(); ++i)
    if (grid.nodes[i].in_region && std::isfinite(f[i]))
      s += grid.nodes[i].weight * f[i];
  return s;
}

// ---------------------------------------------------------------------------
// Simons-type diagnostic
// ---------------------------------------------------------------------------

namespace detail {

inline double simons_bracket(double b2, double h2norm, int n, double c) {
  return (n + 1) * c * b2 +
         static_cast<double>(n) * n / (n + 2) * b2 * h2norm -
         3.0 * (n + 2) / 4.0 * b2 * b2;
}

}  // namespace detail

// Pointwise slack of the curvature lower bound: the infimum over region nodes
// (with complete Laplacian stencils) of
//   1/2 Delta ||B||^2 - [ (n+1) c ||B||^2 + n^2/(n+2) ||B||^2 |H|^2
//                         - 3(n+2)/4 ||B||^4 ].
// Nonnegative in the continuum whenever JH is conformal; a clearly negative
// value flags a map outside that class (or a discretization problem).
inline double simons_diagnostic(const ImmersionMap& map,
                                const AmbientModel& model,
                                const SampleGrid& grid) {
  const int n = grid.n;
  std::vector<double> b2(grid.nodes.size(), 0.0);
  std::vector<double> h2(grid.nodes.size(), 0.0);
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const GridNode& p = grid.nodes[i];
    GeomCore<double> core = eval_geom_core<double>(
        model, map.atlas[static_cast<std::size_t>(p.chart)], p.u);
    Tensor3<double> b = detail::traceless_part(core);
    double s = 0.0;
    for (double v : b.a) s += v * v;
    b2[i] = s;
    h2[i] = core.Hnorm2;
  }
  std::vector<double> lap = laplace_beltrami(grid, b2);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    if (!grid.nodes[i].in_region || !std::isfinite(lap[i])) continue;
    margin = std::min(margin, 0.5 * lap[i] -
                                  detail::simons_bracket(b2[i], h2[i], n,
                                                         model.c));
  }
  if (!std::isfinite(margin))
    throw ConfigError(
        "no region node has a complete Laplacian stencil; increase the grid "
        "resolution");
  return margin;
}

// ---------------------------------------------------------------------------
// Pinching verdict
// ---------------------------------------------------------------------------

struct GapVerdict {
  std::string verdict;       // whitney-consistent | gap-violated | minimal-excluded
  double sup_excess = -std::numeric_limits<double>::infinity();
  double excess_ratio = 0.0;  // sup of ||B||^2 / threshold
  double threshold_min = std::numeric_limits<double>::infinity();
  double threshold_max = -std::numeric_limits<double>::infinity();
  double form_residual = 0.0;  // two algebraic forms of the threshold
  double sup_H2 = 0.0;
  double tolerance = 0.0;
};

// Compares the measured ||B||^2 with the pointwise pinching threshold
//   4(n+1)c / (3(n+2)) + 4 n^2 |H|^2 / (3(n+2)^2).
// The equivalent ||h||^2 threshold (coefficient n^2(9n+22)/(3(n+2)^2) on
// |H|^2) is evaluated independently as an arithmetic cross-check.  Ambient
// curvature c must be nonnegative; minimal maps (sup |H| below tolerance)
// with c > 0 fall outside the verdict's hypotheses and are flagged.
inline GapVerdict gap_verdict(const std::vector<PointInvariants>& points,
                              int n, double c, double tolerance = 1e-8) {
  if (c < 0.0)
    throw UnsupportedAmbientError(
        "pinching verdict requires ambient curvature c >= 0");
  if (n < 2) throw InvalidInputError("pinching verdict requires n >= 2");
  if (points.empty())
    throw InvalidInputError("pinching verdict requires at least one sample");

  GapVerdict out;
  out.tolerance = tolerance;
  const double np2 = n + 2;
  const double base = 4.0 * (n + 1) * c / (3.0 * np2);
  for (const PointInvariants& p : points) {
    const double h2 = p.H_norm2;
    const double th_b = base + 4.0 * n * n * h2 / (3.0 * np2 * np2);
    const double th_h = base + n * n * (9.0 * n + 22.0) * h2 / (3.0 * np2 * np2);
    out.form_residual =
        std::max(out.form_residual,
                 std::abs(th_b + 3.0 * n * n / np2 * h2 - th_h));
    out.sup_excess = std::max(out.sup_excess, p.B_norm2 - th_b);
    out.threshold_min = std::min(out.threshold_min, th_b);
    out.threshold_max = std::max(out.threshold_max, th_b);
    if (th_b > 1e-300)
      out.excess_ratio = std::max(out.excess_ratio, p.B_norm2 / th_b);
    else if (p.B_norm2 > 0.0)
      out.excess_ratio = std::numeric_limits<double>::infinity();
    out.sup_H2 = std::max(out.sup_H2, h2);
  }
  if (c > 0.0 && std::sqrt(out.sup_H2) < tolerance)
    out.verdict = "minimal-excluded";
  else if (out.sup_excess <= tolerance)
    out.verdict = "whitney-consistent";
  else
    out.verdict = "gap-violated";
  return out;
}

// ---------------------------------------------------------------------------
// Whole-map analysis
// ---------------------------------------------------------------------------

struct ScalarStats {
  double sup = -std::numeric_limits<double>::infinity();
  double mean = 0.0;
  double inf = std::numeric_limits<double>::infinity();
};

struct FieldReport {
  int n = 0;
  int resolution = 0;
  SampleGrid grid;
  // Aligned with grid.nodes; entries are meaningful where in_region is set.
  std::vector<PointInvariants> invariants;

  ScalarStats h_norm2, H_norm2, B_norm2;
  ScalarStats lagrangian_defect, eq3_residual, h_symmetry_defect;

  double maslov_defect = 0.0;
  double equivalence_residual = 0.0;
  double codazzi_defect_h = 0.0;
  double codazzi_defect_b = 0.0;
  double simons_margin = 0.0;

  double volume = 0.0;
  double integral_B2 = 0.0;
  double integral_lap_B2 = 0.0;

  double gauss_sup = 0.0;
  std::size_t gauss_samples = 0;

  GapVerdict gap;
  std::vector<std::string> warnings;
};

struct AnalyzeOptions {
  std::size_t gauss_subsample = 64;  // 0 disables the Gauss-equation check
  double gap_tolerance = 1e-8;
};

namespace detail {

inline void accumulate(ScalarStats& st, double v, double w) {
  st.sup = std::max(st.sup, v);
  st.inf = std::min(st.inf, v);
  st.mean += w * v;
}

}  // namespace detail

// Runs the full battery over one map: per-point invariants, the conformal
// check for JH, Codazzi residuals for h and its traceless part, the
// Simons-type margin, integrals, a subsampled Gauss-equation residual, and
// the pinching verdict.  Deterministic for a fixed map and resolution.
inline FieldReport analyze_map(const ImmersionMap& map, int resolution,
                               const AnalyzeOptions& opt = {}) {
  const AmbientModel& model = map.target;
  FieldReport rep;
  rep.n = map.n;
  rep.resolution = resolution;
  rep.grid = build_grid(map, resolution);
  const SampleGrid& grid = rep.grid;

  // Pointwise pass: invariants everywhere, field values for the integrals.
  rep.invariants.resize(grid.nodes.size());
  std::vector<double> b2field(grid.nodes.size(), 0.0);
  std::vector<double> ones(grid.nodes.size(), 1.0);
  double wsum = 0.0;
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const GridNode& p = grid.nodes[i];
    const Chart& chart = map.atlas[static_cast<std::size_t>(p.chart)];
    GeomCore<double> core;
    try {
      core = eval_geom_core<double>(model, chart, p.u);
    } catch (const DegenerateImmersionError& e) {
      throw DegenerateImmersionError(std::string(e.what()) + " at " +
                                     detail::node_location(p));
    }
    FundForms ff;
    ff.h = core.h;
    ff.H = core.Hamb;
    ff.Hstar = core.Hstar;
    ff.Hnorm2 = core.Hnorm2;
    BTensor bt = b_tensor(ff, map.n);
    PointInvariants inv =
        point_invariants(ff, bt, detail::pairing_defect(model, core));
    b2field[i] = inv.B_norm2;
    rep.invariants[i] = inv;
    if (!p.in_region) continue;
    wsum += p.weight;
    detail::accumulate(rep.h_norm2, inv.h_norm2, p.weight);
    detail::accumulate(rep.H_norm2, inv.H_norm2, p.weight);
    detail::accumulate(rep.B_norm2, inv.B_norm2, p.weight);
    detail::accumulate(rep.lagrangian_defect, inv.lagrangian_defect, p.weight);
    detail::accumulate(rep.eq3_residual, inv.eq3_residual, p.weight);
    detail::accumulate(rep.h_symmetry_defect, inv.h_symmetry_defect, p.weight);
  }
  for (ScalarStats* st :
       {&rep.h_norm2, &rep.H_norm2, &rep.B_norm2, &rep.lagrangian_defect,
        &rep.eq3_residual, &rep.h_symmetry_defect}) {
    st->mean /= wsum;
    // Quadrature roundoff must not push the mean outside the pointwise range.
    st->mean = std::clamp(st->mean, st->inf, st->sup);
  }

  // Derivative-based checks.
  MaslovCheck mc = maslov_conformal_defect(map, model, grid);
  rep.maslov_defect = mc.sup_defect;
  rep.equivalence_residual = mc.equivalence_residual;
  if (!mc.warning.empty()) rep.warnings.push_back(mc.warning);
  rep.codazzi_defect_h = codazzi_residual(map, model, grid, TensorPart::full);
  rep.codazzi_defect_b =
      codazzi_residual(map, model, grid, TensorPart::traceless);
  rep.simons_margin = simons_diagnostic(map, model, grid);

  // Integrals.
  rep.volume = integrate(grid, ones);
  rep.integral_B2 = integrate(grid, b2field);
  rep.integral_lap_B2 = integrate(grid, laplace_beltrami(grid, b2field));

  // Gauss equation on a deterministic subsample of region nodes.
  if (opt.gauss_subsample > 0) {
    std::vector<std::size_t> region;
    region.reserve(grid.region_count);
    for (std::size_t i = 0; i < grid.nodes.size(); ++i)
      if (grid.nodes[i].in_region) region.push_back(i);
    const std::size_t stride =
        std::max<std::size_t>(1, region.size() / opt.gauss_subsample);
    for (std::size_t k = 0; k < region.size(); k += stride) {
      const GridNode& p = grid.nodes[region[k]];
      ParamPoint q;
      q.chart = p.chart;
      q.u = p.u;
      const double r = gauss_residual(model, map, q);
      rep.gauss_sup = std::max(rep.gauss_sup, r);
      rep.invariants[region[k]].gauss_residual = r;
      ++rep.gauss_samples;
    }
  }

  // Pinching verdict over the region sample.
  std::vector<PointInvariants> region_inv;
  region_inv.reserve(grid.region_count);
  for (std::size_t i = 0; i < grid.nodes.size(); ++i)
    if (grid.nodes[i].in_region) region_inv.push_back(rep.invariants[i]);
  rep.gap = gap_verdict(region_inv, map.n, model.c, opt.gap_tolerance);

  return rep;
}

}  // namespace laglab
