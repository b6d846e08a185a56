// The symmetric-matrix commutator inequality: closed-form equality cases,
// random sampling, invariances, the equality search, and slice extraction
// from geometric B tensors.
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "laglab/gallery.hpp"
#include "laglab/matrixineq.hpp"

using namespace laglab;
using Catch::Approx;

namespace {

MatrixFamily pair_family(Matrix<double> a, Matrix<double> b) {
  MatrixFamily fam;
  fam.p = 2;
  fam.dim = a.rows;
  fam.A = {std::move(a), std::move(b)};
  return fam;
}

Matrix<double> sym2(double a, double b, double c) {
  Matrix<double> m(2, 2);
  m(0, 0) = a;
  m(0, 1) = b;
  m(1, 0) = b;
  m(1, 1) = c;
  return m;
}

}  // namespace

TEST_CASE("the antisymmetric 2x2 pair achieves equality", "[matrixineq]") {
  auto fam = pair_family(sym2(1.0, 0.0, -1.0), sym2(0.0, 1.0, 0.0));
  auto g = li_li_gap(fam);
  REQUIRE(g.commutator_sum == 16.0);
  REQUIRE(g.s2_sum == 8.0);
  REQUIRE(g.rhs == 24.0);
  REQUIRE(g.gap == 0.0);
}

TEST_CASE("degenerate families reproduce closed forms", "[matrixineq]") {
  // All-zero family.
  auto zero = pair_family(Matrix<double>(2, 2), Matrix<double>(2, 2));
  REQUIRE(li_li_gap(zero).gap == 0.0);

  // Single active matrix: gap = S^2 / 2.
  auto fam = pair_family(sym2(2.0, 0.0, 0.5), Matrix<double>(2, 2));
  const double S = 4.0 + 0.25;
  auto g = li_li_gap(fam);
  REQUIRE(g.commutator_sum == 0.0);
  REQUIRE(g.gap == Approx(S * S / 2.0).margin(1e-12));
}

TEST_CASE("random families never violate the inequality", "[matrixineq]") {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    const int p = 2 + static_cast<int>(seed % 5);    // 2..6
    const int dim = 1 + static_cast<int>(seed % 6);  // 1..6
    auto fam = random_family(p, dim, seed, 2.0);
    auto g = li_li_gap(fam);
    REQUIRE(g.gap >= -1e-12 * std::max(g.rhs, 1.0));
    ++checked;
  }
  REQUIRE(checked == 500);
}

TEST_CASE("random families are deterministic and norm-capped", "[matrixineq]") {
  auto f1 = random_family(3, 4, 42, 2.5);
  auto f2 = random_family(3, 4, 42, 2.5);
  for (int a = 0; a < 3; ++a)
    for (std::size_t k = 0; k < f1.A[a].a.size(); ++k)
      REQUIRE(f1.A[a].a[k] == f2.A[a].a[k]);  // bitwise

  for (const auto& M : f1.A) {
    double frob = 0.0;
    for (double v : M.a) frob += v * v;
    REQUIRE(std::sqrt(frob) <= 2.5 + 1e-12);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) REQUIRE(M(i, j) == M(j, i));
  }

  auto fz = random_family(2, 3, 7, 0.0);
  for (const auto& M : fz.A)
    for (double v : M.a) REQUIRE(v == 0.0);

  REQUIRE_THROWS_AS(random_family(1, 3, 0, 1.0), InvalidInputError);
  REQUIRE_THROWS_AS(random_family(2, 0, 0, 1.0), InvalidInputError);
}

TEST_CASE("the gap is invariant under conjugation and scales at fourth order",
          "[matrixineq]") {
  auto fam = random_family(3, 4, 9, 1.5);
  auto base = li_li_gap(fam);

  // Random orthogonal Q from Gram-Schmidt on a seeded matrix.
  std::mt19937_64 g(123);
  auto unit = [&] { return static_cast<double>(g() >> 11) * 0x1.0p-53; };
  Matrix<double> Q(4, 4);
  for (int j = 0; j < 4; ++j) {
    std::vector<double> w(4);
    for (auto& v : w) v = 2.0 * unit() - 1.0;
    for (int k = 0; k < j; ++k) {
      double d = 0.0;
      for (int i = 0; i < 4; ++i) d += w[i] * Q(i, k);
      for (int i = 0; i < 4; ++i) w[i] -= d * Q(i, k);
    }
    double nw = 0.0;
    for (double v : w) nw += v * v;
    nw = std::sqrt(nw);
    for (int i = 0; i < 4; ++i) Q(i, j) = w[i] / nw;
  }

  MatrixFamily conj = fam;
  for (auto& M : conj.A) {
    Matrix<double> out(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double s = 0.0;
        for (int k = 0; k < 4; ++k)
          for (int l = 0; l < 4; ++l) s += Q(k, i) * M(k, l) * Q(l, j);
        out(i, j) = s;
      }
    // Symmetrize away conjugation roundoff before validation.
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < i; ++j) {
        const double v = 0.5 * (out(i, j) + out(j, i));
        out(i, j) = v;
        out(j, i) = v;
      }
    M = out;
  }
  auto cg = li_li_gap(conj);
  REQUIRE(cg.commutator_sum == Approx(base.commutator_sum).margin(1e-10));
  REQUIRE(cg.s2_sum == Approx(base.s2_sum).margin(1e-10));
  REQUIRE(cg.rhs == Approx(base.rhs).margin(1e-10));
  REQUIRE(cg.gap == Approx(base.gap).margin(1e-10));

  MatrixFamily scaled = fam;
  const double t = 1.7;
  for (auto& M : scaled.A)
    for (double& v : M.a) v *= t;
  auto sg = li_li_gap(scaled);
  const double t4 = t * t * t * t;
  REQUIRE(sg.commutator_sum ==
          Approx(t4 * base.commutator_sum).epsilon(1e-10));
  REQUIRE(sg.s2_sum == Approx(t4 * base.s2_sum).epsilon(1e-10));
  REQUIRE(sg.rhs == Approx(t4 * base.rhs).epsilon(1e-10));
  REQUIRE(sg.gap == Approx(t4 * base.gap).epsilon(1e-10));
}

TEST_CASE("invalid families are rejected", "[matrixineq]") {
  Matrix<double> asym(2, 2);
  asym(0, 1) = 1e-3;  // not mirrored
  auto bad = pair_family(asym, Matrix<double>(2, 2));
  REQUIRE_THROWS_AS(li_li_gap(bad), InvalidInputError);

  MatrixFamily small;
  small.p = 1;
  small.dim = 2;
  small.A = {Matrix<double>(2, 2)};
  REQUIRE_THROWS_AS(li_li_gap(small), InvalidInputError);

  MatrixFamily mismatched;
  mismatched.p = 2;
  mismatched.dim = 3;
  mismatched.A = {Matrix<double>(2, 2), Matrix<double>(2, 2)};
  REQUIRE_THROWS_AS(li_li_gap(mismatched), InvalidInputError);
}

TEST_CASE("the equality search approaches the equality locus", "[matrixineq]") {
  // One evaluation returns exactly the seed family.
  auto one = minimize_gap(2, 2, 5, 1);
  auto seedfam = random_family(2, 2, 5, 1.0);
  for (int a = 0; a < 2; ++a)
    for (std::size_t k = 0; k < seedfam.A[a].a.size(); ++k)
      REQUIRE(one.family.A[a].a[k] == seedfam.A[a].a[k]);
  REQUIRE(one.gap == li_li_gap(seedfam).gap);
  REQUIRE(one.best_after_restart.size() == 1);

  // Full budget: reaches the equality neighborhood for p=2, dim=2.
  auto res = minimize_gap(2, 2, 5, 20000);
  INFO("gap/rhs = " << res.gap / res.rhs);
  REQUIRE(res.rhs > 0.0);
  REQUIRE(res.gap / res.rhs < 1e-6);
  REQUIRE(res.gap >= -1e-10 * res.rhs);

  // Best-so-far is monotone across restarts.
  auto mid = minimize_gap(2, 5, 11, 4000);
  REQUIRE(mid.best_after_restart.size() == 8);
  for (std::size_t r = 1; r < mid.best_after_restart.size(); ++r)
    REQUIRE(mid.best_after_restart[r] <= mid.best_after_restart[r - 1]);
  REQUIRE(mid.gap / mid.rhs > 0.0);

  REQUIRE_THROWS_AS(minimize_gap(2, 2, 5, 0), InvalidInputError);
}

TEST_CASE("slices of the torus B tensor conserve its norm", "[matrixineq]") {
  auto map = make_immersion(ExampleSpec(FlatTorus{{1.0, 1.0}}));
  auto jet = evaluate_jet(map, ParamPoint{0, {0.3, 0.7}}, 2, JetEngine::Exact);
  auto frame = build_frame(map.target, jet);
  auto ff = second_fundamental_form(map.target, jet, frame);
  auto bt = b_tensor(ff, 2);

  auto st = slices_from_b(bt, ff.Hstar);
  REQUIRE(st.family.p == 2);
  REQUIRE(st.B_norm2 == Approx(0.5).margin(1e-12));
  REQUIRE(st.S_star[0] + st.S_star[1] == Approx(0.5).margin(1e-12));
  REQUIRE(st.S_H == Approx(st.S_star[0]).margin(1e-12));
  REQUIRE(st.lambda.size() == 2);

  // Each slice is symmetric, so the family is a valid inequality input.
  auto g = li_li_gap(st.family);
  REQUIRE(g.gap >= -1e-12 * std::max(g.rhs, 1.0));

  // Degenerate H: identity rotation, slices taken in the given frame.
  auto st0 = slices_from_b(bt, std::vector<double>{0.0, 0.0});
  REQUIRE(st0.B_norm2 == Approx(0.5).margin(1e-12));

  // Whitney spheres have vanishing B, hence vanishing slices.
  auto wh = make_immersion(ExampleSpec(WhitneyCn{2, 1.0, {}}));
  auto wjet = evaluate_jet(wh, ParamPoint{0, {0.2, -0.4}}, 2, JetEngine::Exact);
  auto wframe = build_frame(wh.target, wjet);
  auto wff = second_fundamental_form(wh.target, wjet, wframe);
  auto wst = slices_from_b(b_tensor(wff, 2), wff.Hstar);
  REQUIRE(wst.B_norm2 < 1e-15);

  BTensor tiny;
  tiny.b = Tensor3<double>(1, 1, 1);
  REQUIRE_THROWS_AS(slices_from_b(tiny, std::vector<double>{1.0}),
                    InvalidInputError);
}
