#include <random>

#include "doctest.h"
#include "hsm/finitequad.hpp"

using namespace hsm;

namespace {

QuadSpaceFq space(int q, std::vector<std::vector<long long>> g) { return make_quadspace(make_fq(q), g); }

QuadSpaceFq random_space(std::mt19937& rng, FqPtr F, int dim) {
  std::vector<std::vector<long long>> g(dim, std::vector<long long>(dim));
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) g[i][j] = g[j][i] = rng() % F->q();
  return make_quadspace(F, g);
}

// Closed form with the delta shift written as d + t - l + a + 1 (d = r + w);
// kept to show that this reading is not the subspace count.
Int shifted_delta_variant(const WittData& wd, long l, long q, bool drop_l) {
  long d = wd.r + wd.w;
  Int total = 0;
  for (long a = 0; a <= l; ++a) {
    if (a > wd.t || l - a > wd.r) continue;
    long m = drop_l ? d + wd.t + a + 1 : d + wd.t - l + a + 1;
    total += ipow(q, (wd.t - a) * (l - a)) * delta(m, a, q) * beta(wd.t, a, q) * beta(wd.r, l - a, q);
  }
  return total;
}

}  // namespace

TEST_CASE("field tables satisfy the axioms") {
  for (auto [p, f] : {std::pair{3, 1}, {5, 1}, {7, 1}, {3, 2}, {5, 2}, {7, 2}}) {
    Fq K(p, f);
    int q = K.q();
    for (int a = 0; a < q; ++a) {
      CHECK(K.add(a, K.neg(a)) == 0);
      if (a) CHECK(K.mul(a, K.inv(a)) == 1);
      for (int b = 0; b < q; ++b) {
        CHECK(K.add(a, b) == K.add(b, a));
        CHECK(K.mul(a, b) == K.mul(b, a));
        for (int c = 0; c < q; c += 3) CHECK(K.mul(a, K.add(b, c)) == K.add(K.mul(a, b), K.mul(a, c)));
      }
    }
    int squares = 0;
    for (int a = 1; a < q; ++a) squares += K.is_square(a);
    CHECK(squares == (q - 1) / 2);
    // The trace map onto F_p is surjective and additive.
    for (int a = 0; a < q; ++a) CHECK(K.trace(a) < p);
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; ++b) CHECK(K.trace(K.add(a, b)) == (K.trace(a) + K.trace(b)) % p);
  }
  CHECK_THROWS(Fq(2, 1));
  CHECK_THROWS(Fq(9, 1));
  CHECK_THROWS(Fq(3, std::vector<int>{1, 0, 1, 1}));  // x^3 + x^2 + 1 vanishes at x = 1
}

TEST_CASE("witt decomposition examples") {
  auto h = witt_decompose(space(3, {{0, 1}, {1, 0}}));
  CHECK(h.data == WittData{0, 1, 0});
  auto z = witt_decompose(space(3, {{0, 0}, {0, 0}}));
  CHECK(z.data == WittData{2, 0, 0});
  auto one = witt_decompose(space(3, {{1}}));
  CHECK(one.data == WittData{0, 0, 1});
  // x^2 + y^2 over F_3 is anisotropic since -1 is not a square.
  CHECK(witt_decompose(space(3, {{1, 0}, {0, 1}})).data == WittData{0, 0, 2});
  CHECK(witt_decompose(space(5, {{1, 0}, {0, 1}})).data == WittData{0, 1, 0});
}

TEST_CASE("witt witness reproduces the splitting and matches the fast invariant") {
  std::mt19937 rng(17);
  for (auto [p, f] : {std::pair{3, 1}, {5, 1}, {7, 1}, {3, 2}}) {
    auto F = make_fq(p, f);
    for (int it = 0; it < 150; ++it) {
      int dim = 1 + rng() % 5;
      auto V = random_space(rng, F, dim);
      auto wd = witt_decompose(V);
      CHECK(wd.data.r + 2 * wd.data.t + wd.data.w == dim);
      CHECK(wd.data.w <= 2);
      CHECK(wd.data == witt_data(V));
      REQUIRE(static_cast<int>(wd.basis.size()) == dim);
      const auto& B = wd.basis;
      int r = wd.data.r, t = wd.data.t;
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) {
          int v = V.bilinear(B[a], B[b]);
          bool in_rad = a < r || b < r;
          if (in_rad) CHECK(v == 0);
          int pa = a - r, pb = b - r;
          if (!in_rad && pa < 2 * t && pb < 2 * t) {
            int expect = (pa / 2 == pb / 2 && pa != pb) ? 1 : 0;
            CHECK(v == expect);
          }
          if (!in_rad && (pa < 2 * t) != (pb < 2 * t)) CHECK(v == 0);
        }
    }
  }
}

TEST_CASE("beta and delta") {
  CHECK(beta(2, 1, 3) == 4);
  CHECK(beta(5, 0, 7) == 1);
  CHECK(delta(2, 1, 3) == 10);
  CHECK(delta(4, 0, 3) == 1);
  for (long q : {3L, 5L}) {
    Fq K(static_cast<int>(q));
    for (int m = 0; m <= 4; ++m)
      for (int r = 0; r <= m; ++r)
        CHECK(beta(m, r, q) == static_cast<long>(enumerate_subspaces(K, m, r).size()));
  }
  CHECK_THROWS(beta(1, 2, 3));
}

TEST_CASE("isotropic counts on small examples") {
  auto H = space(3, {{0, 1}, {1, 0}});
  CHECK(count_isotropic(H, 1) == 2);
  CHECK(count_isotropic_brute(H, 1) == 2);
  CHECK(count_isotropic(H, 0) == 1);
  auto Z = space(3, {{0, 0}, {0, 0}});
  CHECK(count_isotropic(Z, 1) == 4);
  CHECK(count_isotropic_brute(Z, 1) == 4);
  CHECK_THROWS(count_isotropic(H, 3));
}

TEST_CASE("shifted delta readings disagree with the subspace count on H") {
  WittData h{0, 1, 0};
  CHECK(count_isotropic_closed(h, 1, 3) == 2);
  CHECK(shifted_delta_variant(h, 1, 3, false) == 10);
  CHECK(shifted_delta_variant(h, 1, 3, true) == 28);
}

TEST_CASE("closed form equals brute force on random spaces up to dim 5") {
  std::mt19937 rng(23);
  for (auto [p, f] : {std::pair{3, 1}, {5, 1}, {7, 1}, {3, 2}}) {
    auto F = make_fq(p, f);
    for (int it = 0; it < 40; ++it) {
      int dim = 1 + rng() % (F->q() > 5 ? 3 : 5);
      auto V = random_space(rng, F, dim);
      for (int l = 0; l <= dim; ++l) CHECK(count_isotropic(V, l) == count_isotropic_brute(V, l));
    }
  }
}

TEST_CASE("alpha_j") {
  auto H = space(3, {{0, 1}, {1, 0}});
  CHECK(alpha_j(H, 1, 2) == 2);  // n - j = 1, m1 = 2
  CHECK(alpha_j(H, 2, 2) == 0);  // H itself is not totally isotropic
  auto empty = make_quadspace(make_fq(3), {});
  CHECK(alpha_j(empty, 1, 1) == 1);
  CHECK(alpha_j(space(3, {{1}}), 1, 3) == 0);
}

TEST_CASE("exhaustive grid for small dimensions") {
  for (int q : {3, 5}) {
    Fq K(q);
    for (int dim = 0; dim <= 3; ++dim) {
      auto rep = isotropic_grid(K, dim);
      CHECK(rep.mismatches == 0);
    }
  }
  CHECK(isotropic_grid(Fq(3), 2).matrices == 27);
}

TEST_CASE("complete symmetric character sums") {
  Fq K(3);
  CHECK(complete_symmetric_charsum_brute(K, {0}, 1, 1) == Cyclotomic(3));
  CHECK(complete_symmetric_charsum(K, {0}, 1, 1) == Cyclotomic(3));
  CHECK(complete_symmetric_charsum_brute(K, {1}, 1, 1).is_zero());
  CHECK(complete_symmetric_charsum(K, {0, 0, 0, 0}, 2, 2) == Cyclotomic(729));
  CHECK(complete_symmetric_charsum_brute(K, {0, 0, 0, 0}, 2, 2) == Cyclotomic(729));
  for (auto [p, f] : {std::pair{3, 1}, {5, 1}, {3, 2}}) {
    Fq F(p, f);
    int q = F.q();
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; b += (q > 5 ? 4 : 1))
        for (int d = 0; d < q; d += 2) {
          std::vector<int> T{a, b, b, d};
          for (int e = 1; e <= (q > 5 ? 1 : 2); ++e) {
            auto fast = complete_symmetric_charsum(F, T, 2, e, 1 + (a % (q - 1)));
            CHECK(fast == complete_symmetric_charsum_brute(F, T, 2, e, 1 + (a % (q - 1))));
            CHECK(fast.is_zero() == (a != 0 || b != 0 || d != 0));
          }
        }
  }
}

TEST_CASE("rank stratification small cases") {
  auto r1 = rank_stratify(Fq(3), 1);
  CHECK(r1.ok());
  CHECK(r1.stratum_pairs == std::vector<long long>{1, 2});
  auto r2 = rank_stratify(Fq(3), 2);
  CHECK(r2.ok());
  CHECK(r2.stratum_pairs[1] == 8);
  CHECK(r2.stratum_matrices[1] == 8);
  CHECK(rank_stratify(Fq(5), 2).ok());
}
