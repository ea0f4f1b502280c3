#include <bitset>
#include <map>
#include <tuple>
#include <random>
#include <set>

#include "doctest.h"
#include "hsm/lattice.hpp"

using namespace hsm;

namespace {

QuadFieldPtr field(long d) { return std::make_shared<const QuadField>(d); }

KMatrix kmat(const QuadField& K, const std::vector<std::vector<std::string>>& rows) {
  KMatrix M(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j) M(i, j) = parse_element(rows[i][j], K.d());
  return M;
}

// Subgroups of (Z/9)^2 as bitsets of their 81 elements, by closure of generator pairs.
std::size_t count_subgroups_z9_squared() {
  std::set<std::string> seen;
  for (int g1 = 0; g1 < 81; ++g1)
    for (int g2 = g1; g2 < 81; ++g2) {
      std::bitset<81> s;
      for (int a = 0; a < 9; ++a)
        for (int b = 0; b < 9; ++b) {
          int x = (a * (g1 / 9) + b * (g2 / 9)) % 9, y = (a * (g1 % 9) + b * (g2 % 9)) % 9;
          s.set(x * 9 + y);
        }
      seen.insert(s.to_string());
    }
  return seen.size();
}

// Number of O/P^2-submodules of (O/P^2)^n from the (S1, S2, phi) parametrisation.
long formula_count(int n, long q) {
  long total = 0;
  for (int s = 0; s <= n; ++s)
    for (int a = 0; a <= s; ++a)
      total += Int(beta(n, s, q) * beta(s, a, q) * ipow(q, a * (n - s))).get_si();
  return total;
}

KMatrix random_unimodular(const QuadField& K, int n, std::mt19937& rng) {
  KMatrix U = KMatrix::identity(n);
  for (int step = 0; step < 6; ++step) {
    int i = rng() % n, j = rng() % n;
    if (i == j) continue;
    FieldElement c = K.elt(static_cast<long>(rng() % 5) - 2, K.degree() == 2 ? static_cast<long>(rng() % 3) - 1 : 0);
    KMatrix E = KMatrix::identity(n);
    E(i, j) = c;
    U = U * E;
  }
  if (rng() % 2) {
    KMatrix S = KMatrix::identity(n);
    S(0, 0) = K.elt(-1);
    U = U * S;
  }
  if (K.degree() == 2 && rng() % 2) {
    KMatrix S = KMatrix::identity(n);
    S(n - 1, n - 1) = K.fundamental_unit();
    U = U * S;
  }
  return U;
}

PseudoLattice rebased(const PseudoLattice& L, const KMatrix& U) {
  PseudoLattice M = L;
  M.basis = L.basis * U;
  return M;
}

}  // namespace

TEST_CASE("even integrality") {
  CHECK(is_even_integral(make_lattice_q({{2, 1}, {1, 2}})));
  CHECK(!is_even_integral(make_lattice_q({{1}})));
  auto Q = field(1);
  KMatrix T(1, 1);
  T(0, 0) = FieldElement(make_rational(2, 3));
  CHECK(is_even_integral(make_lattice(Q, T, Q->principal(Q->elt(3)))));
  CHECK(!is_even_integral(make_lattice(Q, T, Q->unit_ideal())));
  // Coefficient ideals enter: 2Z x with gram [[1/2]] has t in 2 I^-2.
  KMatrix H(1, 1);
  H(0, 0) = FieldElement(make_rational(1, 2));
  CHECK(is_even_integral(make_lattice(Q, H, Q->unit_ideal(), {Q->principal(Q->elt(2))})));
  CHECK(is_positive_semidefinite(make_lattice_q({{2, 2}, {2, 2}})));
  CHECK(!is_positive_semidefinite(make_lattice_q({{2, 3}, {3, 2}})));
  CHECK(!is_nondegenerate(make_lattice_q({{2, 2}, {2, 2}})));
}

TEST_CASE("invariant factors") {
  auto L = make_lattice_q({{2, 1}, {1, 2}});
  auto f = invariant_factors(L, L);
  CHECK(f.A[0] == L.K->unit_ideal());
  CHECK(f.A[1] == L.K->unit_ideal());
  auto O = L;
  O.basis(0, 0) = FieldElement(3);
  auto g = invariant_factors(L, O);
  CHECK(g.A[0] == L.K->unit_ideal());
  CHECK(g.A[1] == L.K->principal(FieldElement(3)));
  REQUIRE(g.U.has_value());
  // Chain and SNF agreement on random integer changes.
  std::mt19937 rng(5);
  for (int it = 0; it < 50; ++it) {
    auto M = L;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) M.basis(i, j) = FieldElement(static_cast<long>(rng() % 13) - 6);
    if (det_k(M.basis).is_zero()) continue;
    auto h = invariant_factors(L, M);
    CHECK(L.K->subset(h.A[1], h.A[0]));
    IntMatrix Mi(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) Mi(i, j) = M.basis(i, j).a.get_num();
    auto s = snf(Mi);
    CHECK(h.A[0] == L.K->principal(FieldElement(Rational(s.D(0, 0)))));
    CHECK(h.A[1] == L.K->principal(FieldElement(Rational(s.D(1, 1)))));
  }
}

TEST_CASE("intermediate lattices in rank one over Q") {
  auto L = make_lattice_q({{2}});
  auto P = L.K->primes_above(3)[0];
  auto all = enumerate_intermediate(L, P);
  REQUIRE(all.size() == 3);
  std::set<std::tuple<int, int, int>> tags;
  std::set<Rational> gens;
  for (const auto& I : all) {
    tags.insert({I.r0, I.m1, I.r2});
    gens.insert(I.omega.basis(0, 0).a < 0 ? -I.omega.basis(0, 0).a : I.omega.basis(0, 0).a);
  }
  CHECK(tags == std::set<std::tuple<int, int, int>>{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  CHECK(gens == std::set<Rational>{Rational(3), Rational(1), make_rational(1, 3)});
  CHECK(enumerate_intermediate(L, P, true).size() == 2);
  CHECK_THROWS(enumerate_intermediate(L, L.K->primes_above(2)[0]));
}

TEST_CASE("intermediate lattices in rank two match the submodules of (Z/9)^2") {
  auto L = make_lattice_q({{2, 1}, {1, 2}});
  auto P = L.K->primes_above(3)[0];
  auto all = enumerate_intermediate(L, P);
  CHECK(all.size() == count_subgroups_z9_squared());
  CHECK(static_cast<long>(all.size()) == formula_count(2, 3));
  std::set<std::vector<Rational>> distinct;
  std::map<std::tuple<int, int, int>, int> strata;
  FracIdeal p = P.P, pinv = L.K->inv(P.P), one = L.K->unit_ideal();
  for (const auto& I : all) {
    auto f = invariant_factors(L, I.omega);
    CHECK(multiplicity(f, p) == I.r0);
    CHECK(multiplicity(f, one) == I.m1);
    CHECK(multiplicity(f, pinv) == I.r2);
    CHECK(I.r0 + I.m1 + I.r2 == 2);
    // Omega / 3 Lambda as a canonical Z-span: compare the HNF of 3 * basis.
    IntMatrix B(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        Rational x = I.omega.basis(i, j).a * 3;
        REQUIRE(is_integer(x));
        B(i, j) = x.get_num();
      }
    auto h = hnf(B);
    std::vector<Rational> key;
    for (const auto& x : h.H.data()) key.emplace_back(x);
    distinct.insert(key);
    ++strata[{I.r0, I.m1, I.r2}];
  }
  CHECK(distinct.size() == all.size());
  for (const auto& [t, c] : strata) CHECK(strata[{std::get<2>(t), std::get<1>(t), std::get<0>(t)}] == c);
  CHECK(enumerate_intermediate(L, P, true).size() == 1 + 4 + 1);
}

TEST_CASE("intermediate lattices over Q(sqrt5)") {
  auto K = field(5);
  auto L = make_lattice(K, kmat(*K, {{"2", "1"}, {"1", "2"}}), K->unit_ideal());
  for (long p : {3L, 11L}) {
    auto P = K->primes_above(p)[0];
    auto all = enumerate_intermediate(L, P);
    CHECK(static_cast<long>(all.size()) == formula_count(2, P.norm()));
    for (std::size_t i = 0; i < all.size(); i += 7) {
      auto f = invariant_factors(L, all[i].omega);
      CHECK(multiplicity(f, P.P) == all[i].r0);
      CHECK(multiplicity(f, K->inv(P.P)) == all[i].r2);
    }
  }
}

TEST_CASE("residue spaces") {
  auto L = make_lattice_q({{2, 0}, {0, 2}});
  auto P = L.K->primes_above(3)[0];
  auto all = enumerate_intermediate(L, P);
  for (const auto& I : all) {
    auto V = residue_space(L, I.omega, P);
    CHECK(V.dim == I.m1);
    if (I.m1 == 2) {
      CHECK(V.gram == std::vector<int>{1, 0, 0, 1});
    }
    auto W = residue_space(L, I.omega, P, FieldElement(2));
    CHECK(witt_data(V) == witt_data(W));
  }
  auto PL = L;
  PL.basis = L.basis.scaled(FieldElement(3));
  CHECK(residue_space(L, PL, P).dim == 0);
  // Presentation independence: a unimodular change of Lambda's basis.
  std::mt19937 rng(2);
  auto L2 = rebased(L, random_unimodular(*L.K, 2, rng));
  for (std::size_t i = 0; i < all.size(); i += 5)
    CHECK(witt_data(residue_space(L2, all[i].omega, P)) == witt_data(residue_space(L, all[i].omega, P)));
  CHECK_THROWS_AS(residue_space(L, all[0].omega, P, FieldElement(3)), std::invalid_argument);
}

TEST_CASE("canonical keys over Q") {
  auto a = canonical_key(make_lattice_q({{2, 1}, {1, 2}}));
  auto b = canonical_key(make_lattice_q({{2, -1}, {-1, 2}}));
  auto c = canonical_key(make_lattice_q({{2, 0}, {0, 4}}));
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.to_string() == "[[2, -1], [-1, 2]]");
  CHECK(canonical_key(make_lattice_q({{1, 0}, {0, 3}}, 2)) == canonical_key(make_lattice_q({{2, 0}, {0, 6}})));
  RatMatrix S{{2, 2}, {2, 2}};
  CHECK(canonical_form_z(S) == RatMatrix{{2, 0}, {0, 0}});
  RatMatrix Z(2, 2);
  CHECK(canonical_form_z(Z) == Z);
  std::mt19937 rng(11);
  for (const auto& g : std::vector<std::vector<std::vector<long>>>{
           {{2, 1, 0}, {1, 2, 1}, {0, 1, 4}}, {{4, 2}, {2, 6}}, {{2, 0, 0}, {0, 2, 0}, {0, 0, 2}}}) {
    auto L = make_lattice_q(g);
    auto key = canonical_key(L);
    for (int it = 0; it < 20; ++it) {
      auto M = rebased(L, random_unimodular(*L.K, L.n, rng));
      CHECK(canonical_key(M) == key);
      CHECK(canonical_key(free_presentation(M)) == key);
    }
  }
}

TEST_CASE("orientation in keys") {
  // 4x^2 + 2xy + 6y^2 is reduced and not ambiguous, so it has no improper automorphism.
  auto L = make_lattice_q({{4, 1}, {1, 6}});
  auto k1 = canonical_key(L, true);
  CHECK(k1.orient != 0);
  KMatrix U{{FieldElement(0), FieldElement(1)}, {FieldElement(1), FieldElement(0)}};
  CHECK(canonical_key(rebased(L, U), true) == k1);  // same space, same orientation
  auto Lr = L;
  Lr.orientation = -1;
  CHECK(canonical_key(Lr, true).orient == -k1.orient);
  CHECK(canonical_key(make_lattice_q({{2, 0}, {0, 4}}), true).orient == 0);
}

TEST_CASE("canonical keys over Q(sqrt5)") {
  auto K = field(5);
  auto L = make_lattice(K, kmat(*K, {{"2", "w"}, {"w", "4"}}), K->unit_ideal());
  REQUIRE(is_positive_semidefinite(L));
  auto key = canonical_key(L);
  std::mt19937 rng(3);
  for (int it = 0; it < 10; ++it) CHECK(canonical_key(rebased(L, random_unimodular(*K, 2, rng))) == key);
  // Coefficient ideal re-choice: I_1 = beta O with x_1 scaled by 1/beta.
  FieldElement beta = K->elt(2, 1);
  auto M = L;
  M.ideals[0] = K->principal(beta);
  M.basis(0, 0) = FieldElement(1) / beta;
  CHECK(canonical_key(M) == key);
  // Rescaling: Lambda^{I^2 J} identified with (I Lambda)^J.
  FieldElement g = K->elt(1, 1);
  auto IL = L;
  IL.ideals = {K->principal(g), K->principal(g)};
  auto LI2 = with_scaling(L, K->principal(g * g));
  CHECK(canonical_key(IL) == canonical_key(LI2));
  // J -> u J for a unit changes nothing.
  CHECK(canonical_key(with_scaling(L, K->principal(K->fundamental_unit()))) == key);
  auto other = make_lattice(K, kmat(*K, {{"2", "1"}, {"1", "4"}}), K->unit_ideal());
  CHECK(canonical_key(other) != key);
}

TEST_CASE("json round trip") {
  auto K = field(5);
  auto L = make_lattice(K, kmat(*K, {{"2", "1/2-w"}, {"1/2-w", "4"}}), K->principal(K->elt(3)),
                        {K->unit_ideal(), K->principal(K->elt(2, 1))}, -1);
  auto j = to_json(L);
  auto L2 = lattice_from_json(j);
  CHECK(to_json(L2).dump() == j.dump());
  CHECK(j["gram"][0][1] == "1/2-w");
  CHECK_THROWS_WITH_AS(lattice_from_json(nlohmann::json::parse(R"({"gram": [[2, "x"], [1, 2]]})")),
                       doctest::Contains("/gram/0/1"), std::invalid_argument);
  CHECK_THROWS_AS(lattice_from_json(nlohmann::json::parse(R"({"gram": [[2, 1], [0, 2]]})")), std::invalid_argument);
}
