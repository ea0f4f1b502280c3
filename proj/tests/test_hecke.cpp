#include <functional>
#include <random>

#include "doctest.h"
#include "hsm/oracles.hpp"

using namespace hsm;

namespace {

QuadFieldPtr field(long d) { return std::make_shared<const QuadField>(d); }

HeckeContext q_context(int n, int k, long p) {
  auto K = field(1);
  return make_context(K, n, k, K->primes_above(p).at(0));
}

PseudoLattice lattice_of(const IntMatrix& S) {
  std::vector<std::vector<long>> g(S.rows(), std::vector<long>(S.cols()));
  for (std::size_t i = 0; i < S.rows(); ++i)
    for (std::size_t j = 0; j < S.cols(); ++j) g[i][j] = S(i, j).get_si();
  return make_lattice_q(g);
}

// Deterministic pseudo-random coefficient per key; zero off the even integral keys.
CoefficientOracle hashed_oracle(unsigned salt) {
  return {[salt](const LatticeKey& key) {
    if (!key_is_even_integral(key)) return Cyclotomic(0);
    std::size_t h = std::hash<std::string>{}(key.to_string()) ^ (salt * 0x9e3779b97f4a7c15ULL);
    return Cyclotomic(Rational(static_cast<long>(h % 997) - 498));
  }};
}

}  // namespace

TEST_CASE("exponent data") {
  auto c1 = q_context(1, 6, 3);
  auto x = exponents_tj(c1, 0, 1, 0, 1);
  CHECK(x.r1 == 1);
  CHECK(x.E == 6 - 1);
  CHECK(x.e == 1);
  auto c2 = q_context(2, 6, 3);
  auto y = exponents_tj(c2, 0, 0, 2, 2);
  CHECK(y.r1 == 0);
  CHECK(y.E == 4 * 6 - 6);
  CHECK(y.e == 4);
  CHECK(exponents_tj(c2, 2, 0, 0, 1).vanishes);
  // Omega = Lambda contributes with N(P)^{kn - n(n+1)/2}, Omega = P Lambda with N(P)^0
  CHECK(exponent_tp(c1, 0, 1, 0).E == 6 - 1);
  CHECK(exponent_tp(c1, 1, 0, 0).E == 0);
  CHECK(exponent_tp(c2, 0, 2, 0).E == 2 * 6 - 3);
  CHECK(exponent_tp(c2, 2, 0, 0).E == 0);
  CHECK_THROWS_AS(exponent_tp(c2, 0, 1, 1), std::invalid_argument);
  for (int n = 1; n <= 3; ++n) {
    auto c = q_context(n, 4, 3);
    for (int j = 1; j <= n; ++j)
      for (int r0 = 0; r0 <= n; ++r0)
        for (int r2 = 0; r0 + r2 <= n; ++r2) {
          auto z = exponents_tj(c, r0, n - r0 - r2, r2, j);
          CHECK(z.e == z.r2 - z.r0 + j);
        }
  }
}

TEST_CASE("character powers") {
  auto K = field(10);
  ClassCharacter chi{{Cyclotomic(1), Cyclotomic(-1)}};
  auto P2 = K->primes_above(2).at(0);
  CHECK(chi_power(*K, chi, P2.P, 1) == Cyclotomic(-1));
  CHECK(chi_power(*K, chi, P2.P, 2) == Cyclotomic(1));
  CHECK(chi_power(*K, chi, P2.P, 0) == Cyclotomic(1));
  CHECK(chi_power(*K, {}, P2.P, 3) == Cyclotomic(1));
  CHECK_THROWS_AS(make_context(K, 1, 4, P2), std::invalid_argument);
}

TEST_CASE("zero oracle and linearity") {
  auto ctx = q_context(2, 4, 3);
  auto L = make_lattice_q({{2, 1}, {1, 4}});
  CHECK(apply_tp(ctx, zero_oracle(), L).coefficient.is_zero());
  CHECK(apply_tj_tilde(ctx, zero_oracle(), L, 1).coefficient.is_zero());
  auto f = hashed_oracle(1), g = hashed_oracle(2);
  Cyclotomic a(Rational(3)), b(make_rational(-2, 7));
  auto h = sum_oracle(f, a, g, b);
  CHECK(apply_tp(ctx, h, L).coefficient ==
        a * apply_tp(ctx, f, L).coefficient + b * apply_tp(ctx, g, L).coefficient);
  for (int j : {1, 2})
    CHECK(apply_tj_tilde(ctx, h, L, j).coefficient ==
          a * apply_tj_tilde(ctx, f, L, j).coefficient + b * apply_tj_tilde(ctx, g, L, j).coefficient);
  CHECK_THROWS_AS(apply_tp(ctx, f, make_lattice_q({{1, 0}, {0, 2}})), std::invalid_argument);
  CHECK_THROWS_AS(apply_tj_tilde(ctx, f, L, 3), std::invalid_argument);
}

TEST_CASE("degree one: sigma_3 eigenvalues through both paths") {
  const long M = 60;
  for (long p : {3L, 5L, 7L}) {
    auto ctx = q_context(1, 4, p);
    std::vector<IntMatrix> cand;
    for (long m = 1; m <= M / p; ++m) cand.push_back(IntMatrix{{2 * m}});
    auto direct = direct_apply(sigma_series(3, M), HeckeOp::TP, p, 4, 0, cand);
    REQUIRE(direct.dropped.empty());
    for (const auto& [S, v] : direct.values) {
      Cyclotomic c(Rational(sigma_series(3, M).coeff(S)));
      Cyclotomic t = apply_tp(ctx, sigma_oracle(3, M), lattice_of(S)).coefficient;
      CHECK(v == Cyclotomic(Rational(1 + p * p * p)) * c);
      CHECK(t == v);
    }
    auto tj = direct_apply(sigma_series(3, M), HeckeOp::TJ_TILDE, p, 4, 1, {IntMatrix{{2}}, IntMatrix{{4}}});
    for (const auto& [S, v] : tj.values) CHECK(apply_tj_tilde(ctx, sigma_oracle(3, M), lattice_of(S), 1).coefficient == v);
  }
}

TEST_CASE("E8 theta series of degree two") {
  E8Theta2 th(18);
  // shells of E8 have 240 sigma_3(m) vectors
  for (long m = 1; m <= 18; ++m) CHECK(Int(th.shell_size(m)) == 240 * sigma_series(3, 18).coeff(IntMatrix{{2 * m}}));
  CHECK(th.coefficient(IntMatrix{{2, 0}, {0, 2}}) == 240 * 126);
  CHECK(th.coefficient(IntMatrix{{2, 1}, {1, 2}}) == 240 * 56);
  CHECK(th.coefficient(IntMatrix{{2, 2}, {2, 2}}) == 240);
  CHECK(th.coefficient(IntMatrix{{2, -1}, {-1, 2}}) == th.coefficient(IntMatrix{{2, 1}, {1, 2}}));
  CHECK(th.coefficient(IntMatrix{{4, 1}, {1, 2}}) == th.coefficient(IntMatrix{{2, 1}, {1, 4}}));
  CHECK_THROWS_AS(th.coefficient(IntMatrix{{38, 0}, {0, 38}}), TruncationError);
  auto r = reduce_binary(IntMatrix{{10, 7}, {7, 6}});
  CHECK(r == std::array<Int, 3>{1, 1, 3});
}

TEST_CASE("closed-form and coset sum agree on the E8 theta series, n = 2, p = 3, k = 4") {
  E8Theta2 th(18);
  auto ctx = q_context(2, 4, 3);
  std::vector<IntMatrix> cand;
  for (auto [a, b, c] : std::vector<std::array<long, 3>>{{1, 0, 1}, {1, 1, 1}, {1, 0, 2}, {2, 2, 2}})
    cand.push_back(IntMatrix{{2 * a, b}, {b, 2 * c}});
  auto tp = direct_apply(th.series(), HeckeOp::TP, 3, 4, 0, cand);
  CHECK(tp.values.size() == cand.size());
  for (const auto& [S, v] : tp.values) {
    CHECK(apply_tp(ctx, th.oracle(), lattice_of(S)).coefficient == v);
    // Siegel Eisenstein eigenvalue (1 + p^3)(1 + p^2)
    CHECK(v == Cyclotomic(Rational(280 * th.coefficient(S))));
  }
  for (int j : {1, 2}) {
    auto tj = direct_apply(th.series(), HeckeOp::TJ_TILDE, 3, 4, j, cand);
    CHECK(tj.values.size() == cand.size());
    for (const auto& [S, v] : tj.values) CHECK(apply_tj_tilde(ctx, th.oracle(), lattice_of(S), j).coefficient == v);
  }
}

TEST_CASE("terms carry the enumerated strata") {
  auto ctx = q_context(1, 4, 3);
  auto res = apply_tj_tilde(ctx, sigma_oracle(3, 100), make_lattice_q({{6}}), 1);
  REQUIRE(res.terms.size() == 3);
  for (const auto& t : res.terms) CHECK(t.e == t.r2 - t.r0 + 1);
  auto tp = apply_tp(ctx, sigma_oracle(3, 100), make_lattice_q({{6}}));
  CHECK(tp.terms.size() == 2);
}

TEST_CASE("table oracle and exact value parsing") {
  CHECK(parse_cyclotomic("3/4") == Cyclotomic(make_rational(3, 4)));
  Cyclotomic z = parse_cyclotomic("2*zeta9^2 - zeta9");
  CHECK(parse_cyclotomic(z.to_string()) == z);
  auto j = nlohmann::json::parse(R"({"field": 1, "bound": 6,
      "entries": [{"lattice": {"n": 1, "gram": [["2"]]}, "value": "5"}]})");
  auto t = table_oracle_from_json(j);
  auto o = t.oracle();
  CHECK(o.value(canonical_key(make_lattice_q({{2}}))) == Cyclotomic(Rational(5)));
  CHECK(o.value(canonical_key(make_lattice_q({{4}}))).is_zero());
  CHECK_THROWS_AS(o.value(canonical_key(make_lattice_q({{8}}))), TruncationError);
  CHECK_THROWS_AS(table_oracle_from_json(nlohmann::json::parse(R"({"bound": 1, "entries": [{"value": "1"}]})")),
                  std::invalid_argument);
}

TEST_CASE("apply_tp over Q(sqrt5) is independent of the pseudo-presentation") {
  auto K = field(5);
  auto P = K->primes_above(11).at(0);
  auto ctx = make_context(K, 2, 4, P);
  KMatrix G(2, 2);
  G(0, 0) = K->elt(2);
  G(0, 1) = G(1, 0) = K->elt(0, 1);
  G(1, 1) = K->elt(4);
  auto L = make_lattice(K, G, K->unit_ideal());
  auto f = hashed_oracle(5);
  Cyclotomic base = apply_tp(ctx, f, L).coefficient;
  auto M = L;
  FieldElement b = K->elt(2, 1);
  M.ideals[0] = K->principal(b);
  M.basis(0, 0) = FieldElement(1, 0, 5) / b;
  CHECK(apply_tp(ctx, f, M).coefficient == base);
  KMatrix U = KMatrix::identity(2);
  U(0, 1) = K->elt(1, 1);
  auto N = L;
  N.basis = L.basis * U;
  CHECK(apply_tp(ctx, f, N).coefficient == base);
}
