#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "laglab/gallery.hpp"
#include "laglab/geometry.hpp"

using namespace laglab;
using Catch::Approx;

namespace {

PointInvariants invariants_at(const ImmersionMap& map, const ParamPoint& p) {
  Jet jet = evaluate_jet(map, p, 2);
  Frame fr = build_frame(map.target, jet);
  FundForms ff = second_fundamental_form(map.target, jet, fr);
  BTensor bt = b_tensor(ff, map.n);
  return point_invariants(ff, bt, lagrangian_defect(map.target, jet));
}

}  // namespace

TEST_CASE("product torus frame and fundamental forms", "[geometry]") {
  auto map = make_immersion(ExampleSpec(FlatTorus{{1.3, 0.8}}));
  const auto& model = map.target;
  ParamPoint p{0, {0.7, -0.3}};
  Jet jet = evaluate_jet(map, p, 2);
  Frame fr = build_frame(model, jet);

  REQUIRE(fr.g(0, 0) == Approx(1.69).epsilon(1e-13));
  REQUIRE(fr.g(1, 1) == Approx(0.64).epsilon(1e-13));
  REQUIRE(fr.g(0, 1) == Approx(0.0).margin(1e-14));
  REQUIRE(fr.g_inv(0, 0) == Approx(1.0 / 1.69).epsilon(1e-13));

  // frame = coordinate directions scaled to unit length
  for (int a = 0; a < 4; ++a) {
    REQUIRE(fr.e[a] == Approx(jet.D1at(a, 0) / 1.3).margin(1e-14));
    REQUIRE(fr.e[4 + a] == Approx(jet.D1at(a, 1) / 0.8).margin(1e-14));
  }
  REQUIRE(fr.coord_to_frame(0, 0) == Approx(1.0 / 1.3));
  REQUIRE(fr.coord_to_frame(1, 1) == Approx(1.0 / 0.8));
  REQUIRE(fr.coord_to_frame(1, 0) == Approx(0.0).margin(1e-14));

  // orthonormality of e and of Je in the flat inner product
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double see = 0.0, sss = 0.0, mix = 0.0;
      for (int a = 0; a < 4; ++a) {
        see += fr.e[i * 4 + a] * fr.e[j * 4 + a];
        sss += fr.estar[i * 4 + a] * fr.estar[j * 4 + a];
        mix += fr.e[i * 4 + a] * fr.estar[j * 4 + a];
      }
      REQUIRE(see == Approx(i == j ? 1.0 : 0.0).margin(1e-13));
      REQUIRE(sss == Approx(i == j ? 1.0 : 0.0).margin(1e-13));
      REQUIRE(mix == Approx(0.0).margin(1e-13));  // lagrangian pairing
    }

  FundForms ff = second_fundamental_form(model, jet, fr);
  REQUIRE(ff.h(0, 0, 0) == Approx(1.0 / 1.3).epsilon(1e-12));
  REQUIRE(ff.h(1, 1, 1) == Approx(1.0 / 0.8).epsilon(1e-12));
  for (int m = 0; m < 2; ++m)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        if (!(m == i && i == j))
          REQUIRE(ff.h(m, i, j) == Approx(0.0).margin(1e-12));
  REQUIRE(ff.Hstar[0] == Approx(0.5 / 1.3).epsilon(1e-12));
  REQUIRE(ff.Hstar[1] == Approx(0.5 / 0.8).epsilon(1e-12));

  const double S = 1.0 / 1.69 + 1.0 / 0.64;
  BTensor bt = b_tensor(ff, 2);
  auto inv = point_invariants(ff, bt, lagrangian_defect(model, jet));
  REQUIRE(inv.h_norm2 == Approx(S).epsilon(1e-12));
  REQUIRE(inv.H_norm2 == Approx(S / 4.0).epsilon(1e-12));
  REQUIRE(inv.B_norm2 == Approx(S / 4.0).epsilon(1e-12));
  REQUIRE(inv.eq3_residual < 1e-13);
  REQUIRE(inv.h_symmetry_defect < 1e-13);
  REQUIRE(inv.lagrangian_defect < 1e-13);

  // the trace-free part really is trace free, in every slot
  for (int m = 0; m < 2; ++m) {
    double tr = 0.0, tr2 = 0.0;
    for (int i = 0; i < 2; ++i) {
      tr += bt.b(m, i, i);
      tr2 += bt.b(i, i, m);
    }
    REQUIRE(tr == Approx(0.0).margin(1e-13));
    REQUIRE(tr2 == Approx(0.0).margin(1e-13));
  }
}

TEST_CASE("flat plane has vanishing second fundamental form", "[geometry]") {
  auto map = make_immersion(ExampleSpec(FlatPlane{2}));
  auto inv = invariants_at(map, {0, {0.4, -1.1}});
  REQUIRE(inv.h_norm2 == Approx(0.0).margin(1e-20));
  REQUIRE(inv.B_norm2 == Approx(0.0).margin(1e-20));
  REQUIRE(inv.H_norm2 == Approx(0.0).margin(1e-20));
}

TEST_CASE("whitney families have vanishing trace-free part", "[geometry]") {
  std::vector<ExampleSpec> specs{ExampleSpec(WhitneyCn{2, 1.0, {}}),
                                 ExampleSpec(WhitneyCn{3, 0.7, {}}),
                                 ExampleSpec(WhitneyCpn{2, 0.5, 1.0})};
  for (const auto& spec : specs) {
    auto map = make_immersion(spec);
    const int n = map.n;
    std::vector<ParamPoint> pts;
    if (n == 2)
      pts = {{0, {0.3, -0.2}}, {0, {0.8, 0.4}}, {1, {0.5, 0.6}}};
    else
      pts = {{0, {0.3, -0.2, 0.1}}, {1, {0.4, 0.2, -0.5}}};
    for (const auto& p : pts) {
      INFO(map.name << " chart " << p.chart);
      auto inv = invariants_at(map, p);
      REQUIRE(inv.B_norm2 < 1e-16);
      REQUIRE(inv.H_norm2 > 1e-3);  // nowhere minimal
      const double k = 3.0 * n * n / double(n + 2);
      REQUIRE(inv.h_norm2 == Approx(k * inv.H_norm2).epsilon(1e-10));
      REQUIRE(inv.eq3_residual < 1e-12);
      REQUIRE(inv.h_symmetry_defect < 1e-11);
      REQUIRE(inv.lagrangian_defect < 1e-11);
    }
  }
}

TEST_CASE("gauss identities balance for curved members", "[geometry]") {
  {
    auto map = make_immersion(ExampleSpec(FlatTorus{{1.3, 0.8}}));
    REQUIRE(gauss_residual(map.target, map, {0, {0.7, -0.3}}) < 1e-8);
  }
  {
    auto map = make_immersion(ExampleSpec(WhitneyCn{2, 1.0, {}}));
    REQUIRE(gauss_residual(map.target, map, {0, {0.3, -0.2}}) < 1e-6);
    REQUIRE(gauss_residual(map.target, map, {1, {0.5, 0.6}}) < 1e-6);
  }
  {
    auto map = make_immersion(ExampleSpec(WhitneyCpn{2, 0.5, 1.0}));
    REQUIRE(gauss_residual(map.target, map, {0, {0.3, -0.2}}) < 1e-6);
    REQUIRE(gauss_residual(map.target, map, {1, {0.6, -0.7}}) < 1e-6);
  }
}

TEST_CASE("invariants are unchanged by ambient unitary motion", "[geometry]") {
  auto map = make_immersion(ExampleSpec(FlatTorus{{1.3, 0.8}}));
  ParamPoint p{0, {0.7, -0.3}};
  Jet jet = evaluate_jet(map, p, 2);
  FundForms ff = second_fundamental_form(map.target, jet, build_frame(map.target, jet));

  // compose with z -> e^{i phi} U z + t for a coordinate mixing U in U(2)
  const double phi = 0.4, al = 0.9;
  const double cp = std::cos(phi), sp = std::sin(phi);
  const double ca = std::cos(al), sa = std::sin(al);
  std::vector<double> t{0.3, -1.0, 0.55, 2.0};
  Chart base = map.atlas[0];
  auto moved = [base, cp, sp, ca, sa, t](const auto& u) {
    auto y = base(u);
    using T = std::decay_t<decltype(y[0])>;
    // mix the two complex coordinates, then rotate the phase, then shift
    std::vector<T> v(4);
    v[0] = ca * y[0] - sa * y[1];
    v[1] = sa * y[0] + ca * y[1];
    v[2] = ca * y[2] - sa * y[3];
    v[3] = sa * y[2] + ca * y[3];
    std::vector<T> out(4);
    out[0] = cp * v[0] - sp * v[2] + t[0];
    out[1] = cp * v[1] - sp * v[3] + t[1];
    out[2] = sp * v[0] + cp * v[2] + t[2];
    out[3] = sp * v[1] + cp * v[3] + t[3];
    return out;
  };
  ImmersionMap rmap = map;
  rmap.atlas[0] = Chart::make(base.domain, moved);
  rmap.atlas[0].periodic = base.periodic;
  rmap.atlas[0].period = base.period;

  Jet rjet = evaluate_jet(rmap, p, 2);
  FundForms rff =
      second_fundamental_form(rmap.target, rjet, build_frame(rmap.target, rjet));
  for (int m = 0; m < 2; ++m)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        REQUIRE(rff.h(m, i, j) == Approx(ff.h(m, i, j)).margin(1e-12));
  REQUIRE(rff.Hnorm2 == Approx(ff.Hnorm2).epsilon(1e-12));
}

TEST_CASE("two evaluation routes produce the same core", "[geometry]") {
  auto map = make_immersion(ExampleSpec(WhitneyCn{2, 1.0, {}}));
  ParamPoint p{0, {0.3, -0.2}};
  Jet jet = evaluate_jet(map, p, 2);
  FundForms ff = second_fundamental_form(map.target, jet, build_frame(map.target, jet));
  GeomCore<double> core = eval_geom_core(map.target, map.atlas[0], p.u);
  for (int m = 0; m < 2; ++m)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        REQUIRE(core.h(m, i, j) == Approx(ff.h(m, i, j)).margin(1e-13));

  auto g = induced_metric_at(map.target, map.atlas[0], p.u);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      REQUIRE(g(i, j) == Approx(core.g(i, j)).margin(1e-14));
}

TEST_CASE("non-lagrangian immersions are flagged", "[geometry]") {
  ImmersionMap map;
  map.n = 2;
  map.target = AmbientModel::flat(2);
  map.name = "sheared-plane";
  map.lagrangian = false;
  Box box;
  box.lo = {-2.0, -2.0};
  box.hi = {2.0, 2.0};
  map.atlas.push_back(Chart::make(box, [](const auto& u) {
    using T = std::decay_t<decltype(u[0])>;
    // graph of a linear map whose potential is not symmetric
    std::vector<T> y(4);
    y[0] = u[0];
    y[1] = u[1];
    y[2] = 0.3 * u[1];
    y[3] = T(0.0);
    return y;
  }));
  Jet jet = evaluate_jet(map, {0, {0.1, 0.2}}, 1);
  REQUIRE(lagrangian_defect(map.target, jet) > 0.1);

  auto torus = make_immersion(ExampleSpec(FlatTorus{{1.0, 1.0}}));
  Jet tj = evaluate_jet(torus, {0, {0.9, 2.2}}, 1);
  REQUIRE(lagrangian_defect(torus.target, tj) < 1e-14);
}

TEST_CASE("rank-deficient differentials are rejected", "[geometry][errors]") {
  ImmersionMap map;
  map.n = 2;
  map.target = AmbientModel::flat(2);
  map.name = "collapsed";
  Box box;
  box.lo = {-1.0, -1.0};
  box.hi = {1.0, 1.0};
  map.atlas.push_back(Chart::make(box, [](const auto& u) {
    using T = std::decay_t<decltype(u[0])>;
    std::vector<T> y(4);
    y[0] = u[0] + u[1];
    y[1] = u[0] + u[1];
    y[2] = T(0.0);
    y[3] = T(0.0);
    return y;
  }));
  Jet jet = evaluate_jet(map, {0, {0.2, -0.1}}, 2);
  REQUIRE_THROWS_AS(build_frame(map.target, jet), DegenerateImmersionError);

  // nearly collapsed: both differentials have unit scale but are parallel to
  // fourteen digits, so the frame pivot collapses relative to column length
  ImmersionMap near = map;
  near.atlas[0] = Chart::make(box, [](const auto& u) {
    using T = std::decay_t<decltype(u[0])>;
    std::vector<T> y(4);
    y[0] = u[0] + u[1];
    y[1] = u[0] + u[1] + 1e-14 * u[1];
    y[2] = T(0.0);
    y[3] = T(0.0);
    return y;
  });
  Jet njet = evaluate_jet(near, {0, {0.2, -0.1}}, 2);
  REQUIRE_THROWS_AS(build_frame(near.target, njet), DegenerateImmersionError);
}

TEST_CASE("jet order prerequisites", "[geometry][errors]") {
  auto map = make_immersion(ExampleSpec(FlatTorus{{1.0, 1.0}}));
  Jet j0 = evaluate_jet(map, {0, {0.0, 0.0}}, 0);
  Jet j1 = evaluate_jet(map, {0, {0.0, 0.0}}, 1);
  Frame fr = build_frame(map.target, j1);  // order 1 suffices for the frame
  REQUIRE(fr.g(0, 0) == Approx(1.0));
  REQUIRE_THROWS_AS(build_frame(map.target, j0), InvalidInputError);
  REQUIRE_THROWS_AS(second_fundamental_form(map.target, j1, fr),
                    InvalidInputError);
  REQUIRE_THROWS_AS(lagrangian_defect(map.target, j0), InvalidInputError);
}
