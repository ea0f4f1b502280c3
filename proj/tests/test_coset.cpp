#include <random>

#include "doctest.h"
#include "hsm/coset.hpp"

using namespace hsm;

namespace {

QuadFieldPtr field(long d) { return std::make_shared<const QuadField>(d); }

KMatrix kid(std::size_t n, long d) {
  KMatrix M(n, n, FieldElement(0, 0, d));
  for (std::size_t i = 0; i < n; ++i) M(i, i) = FieldElement(1, 0, d);
  return M;
}

// Upper and lower translations of Gamma(I; J) built from Z-bases of the block ideals.
std::vector<KMatrix> translations(const GroupData& G) {
  const QuadField& K = *G.K;
  std::vector<KMatrix> out;
  int n = G.n;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      FracIdeal IiIj = K.mul(G.I[i], G.I[j]);
      FracIdeal b = K.mul(K.mul(IiIj, G.J), K.inv(K.different()));
      FracIdeal c = K.mul(K.inv(K.mul(IiIj, G.J)), K.different());
      for (const auto& x : b.basis()) {
        KMatrix M = kid(2 * n, K.d());
        M(i, n + j) = x;
        M(j, n + i) = x;
        out.push_back(M);
      }
      for (const auto& x : c.basis()) {
        KMatrix M = kid(2 * n, K.d());
        M(n + i, j) = x;
        M(n + j, i) = x;
        out.push_back(M);
      }
    }
  return out;
}

bool conjugates_into_source(const OperatorMatrix& op) {
  KMatrix Minv = inverse_k(op.M);
  for (const auto& g : translations(op.target))
    if (!is_member(op.M * g * Minv, op.source)) return false;
  return true;
}

IntMatrix random_symplectic(int n, std::mt19937_64& rng, int steps) {
  std::uniform_int_distribution<int> pick(0, 3), val(-2, 2), idx(0, n - 1);
  IntMatrix g = IntMatrix::identity(2 * n);
  for (int s = 0; s < steps; ++s) {
    IntMatrix h = IntMatrix::identity(2 * n);
    int kind = pick(rng), i = idx(rng), j = idx(rng);
    if (kind == 0) {
      h(i, n + j) += val(rng);
      if (i != j) h(j, n + i) = h(i, n + j);
    } else if (kind == 1) {
      h(n + i, j) += val(rng);
      if (i != j) h(n + j, i) = h(n + i, j);
    } else if (kind == 2 && i != j) {
      int v = val(rng);
      h(i, j) = v;
      h(n + j, n + i) = -v;
    } else {
      h = IntMatrix(2 * n, 2 * n);
      for (int t = 0; t < n; ++t) {
        h(t, n + t) = 1;
        h(n + t, t) = -1;
      }
    }
    g = g * h;
  }
  return g;
}

Int sigma3(long m) {
  Int s = 0;
  for (long d = 1; d <= m; ++d)
    if (m % d == 0) s += Int(d) * d * d;
  return s;
}

}  // namespace

TEST_CASE("membership over Q and Q(sqrt5)") {
  auto Q = field(1);
  GroupData G = standard_group(Q, 2);
  CHECK(is_member(kid(4, 1), G));
  KMatrix T = kid(4, 1);
  T(0, 3) = FieldElement(3);
  T(1, 2) = FieldElement(3);
  CHECK(is_member(T, G));
  T(0, 3) = FieldElement(make_rational(1, 2));
  CHECK_FALSE(is_member(T, G));

  auto K = field(5);
  GroupData H = standard_group(K, 2);
  auto P = K->primes_above(11).at(0);
  H.I[1] = P.P;
  CHECK(is_member(kid(4, 5), H));
  for (const auto& g : translations(H)) CHECK(is_member(g, H));
  // b_22 must lie in I_2^2 d^-1; 1/2 * generator of I_2^2 d^-1 does not
  FracIdeal b22 = K->mul(K->mul(P.P, P.P), K->inv(K->different()));
  KMatrix M = kid(4, 5);
  M(1, 3) = b22.basis()[0] * FieldElement(make_rational(1, 2), 0, 5);
  CHECK_FALSE(is_member(M, H));
}

TEST_CASE("operator matrices conjugate the target group into the source") {
  for (long d : {5L, 10L}) {
    auto K = field(d);
    GroupData G = standard_group(K, 2);
    auto P3 = K->primes_above(3).at(0);
    auto P2 = K->primes_above(2).at(0);
    G.I[0] = P3.P;
    auto U = operator_U(G, 2, K->elt(3, 1));
    CHECK(conjugates_into_source(U));
    auto W = operator_W(G, K->elt(7));
    CHECK(conjugates_into_source(W));
    auto V = operator_V(G, 1, P2.P);
    CHECK(conjugates_into_source(V));
    for (int l = 1; l <= 2; ++l) {
      auto S = operator_S(G, l, P2.P);
      CHECK(conjugates_into_source(S));
      CHECK(S.target.I[l - 1] == K->mul(K->inv(P2.P), G.I[l - 1]));
    }
  }
}

TEST_CASE("operator relations: S_i(Q) V_i(Q) and S_{i+1}(Q) differ by the source group") {
  for (long d : {5L, 10L}) {
    auto K = field(d);
    GroupData G = standard_group(K, 2);
    auto Q = K->primes_above(3).at(0).P;
    auto S1 = operator_S(G, 1, Q);
    auto V1 = operator_V(S1.target, 1, Q);
    auto S2 = operator_S(G, 2, Q);
    // f|S_1 V_1 and f|S_2 land in the same group
    CHECK(V1.target.I == S2.target.I);
    KMatrix X = S1.M * V1.M * inverse_k(S2.M);
    CHECK(is_member(X, G));
    // U_1(a^-1) S_1(Q) = S_1(aQ)
    FieldElement a = K->elt(2, 1);
    auto U = operator_U(G, 1, FieldElement(1, 0, d) / a);
    auto S = operator_S(U.target, 1, Q);
    auto Sa = operator_S(G, 1, K->scale(Q, a));
    CHECK(S.target.I == Sa.target.I);
    CHECK(is_member(U.M * S.M * inverse_k(Sa.M), G));
  }
}

TEST_CASE("coprime pair completion") {
  IntMatrix c{{0}}, d{{1}};
  auto r = complete_coprime_pair(c, d);
  CHECK(is_member_z(to_rational(r.G)));
  CHECK(r.G.block(1, 0, 1, 2) == IntMatrix{{0, 1}});

  IntMatrix C = IntMatrix::identity(2), D(2, 2);
  auto r2 = complete_coprime_pair(C, D);
  CHECK(is_member_z(to_rational(r2.G)));
  CHECK(r2.G.block(2, 0, 2, 2) == C);
  CHECK(r2.G.block(2, 2, 2, 2) == D);

  IntMatrix bad{{3, 0}, {0, 1}}, bd{{0, 0}, {0, 1}};
  CHECK_THROWS_WITH_AS(complete_coprime_pair(bad, bd), doctest::Contains("prime 3"), std::invalid_argument);

  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    int n = 1 + t % 2;
    IntMatrix g = random_symplectic(n, rng, 6);
    IntMatrix Cc = g.block(n, 0, n, n), Dc = g.block(n, n, n, n);
    auto res = complete_coprime_pair(Cc, Dc);
    REQUIRE(is_member_z(to_rational(res.G)));
    CHECK(res.G.block(n, 0, n, n) == Cc);
    CHECK(res.G.block(n, n, n, n) == Dc);
    CHECK(is_member_z(to_rational(res.Gprime)));
    CHECK(is_member_z(to_rational(res.M)));
    CHECK(gcd(det(res.Gprime.block(n, 0, n, n)), det(res.Gprime.block(n, n, n, n))) == 1);
  }
}

TEST_CASE("T(p) representatives") {
  for (int n : {1, 2})
    for (long p : {3L, 5L}) {
      auto reps = gen_reps_tp(n, p);
      Int expect = 0;
      for (int r = 0; r <= n; ++r) expect += beta(n, r, p) * ipow(Int(p), r * (r + 1) / 2);
      CHECK(Int(reps.size()) == expect);
      CHECK(structural_count_tp(n, p) == expect);
      CHECK(Int(orbit_reps(delta_inverse_tp(n, p), p).size()) == expect);
      for (const auto& r : reps) CHECK(is_member_z(to_rational(r.gamma)));
      if (p == 3) CHECK(pairwise_inequivalent(reps, delta_inverse_tp(n, p)));
    }
  CHECK(gen_reps_tp(1, 3).size() == 4);
  CHECK(gen_reps_tp(2, 3).size() == 40);
  // a duplicated representative is detected
  auto reps = gen_reps_tp(2, 3);
  reps.push_back(reps[5]);
  CHECK_FALSE(pairwise_inequivalent(reps, delta_inverse_tp(2, 3)));
}

TEST_CASE("T_j(p^2) representatives") {
  CHECK(count_nonsingular_symmetric(1, 3) == 2);
  CHECK(count_nonsingular_symmetric(2, 3) == 18);
  auto r11 = gen_reps_tj(1, 3, 1);
  CHECK(r11.size() == 12);
  CHECK(structural_count_tj(1, 3, 1) == 12);
  CHECK(pairwise_inequivalent(r11, delta_inverse_tj(1, 3, 1)));
  for (int j : {1, 2}) {
    auto reps = gen_reps_tj(2, 3, j);
    CHECK(Int(reps.size()) == structural_count_tj(2, 3, j));
    for (const auto& r : reps) CHECK(is_member_z(to_rational(r.gamma)));
    CHECK(pairwise_inequivalent(reps, delta_inverse_tj(2, 3, j)));
  }
}

TEST_CASE("triangularization of delta^-1 gamma") {
  for (const auto& r : gen_reps_tj(2, 3, 1)) {
    RatMatrix g = delta_inverse_tj(2, 3, 1) * to_rational(r.gamma);
    Triangular t = triangularize(g);
    CHECK(t.nu == 1);
    CHECK((t.B * inverse(t.D)).is_symmetric());
  }
}

TEST_CASE("direct action on the weight 4 Eisenstein series") {
  const long M = 12;
  SeriesQ f;
  f.n = 1;
  f.known = [&](const IntMatrix& T) { return T(0, 0) <= 2 * M; };
  f.coeff = [&](const IntMatrix& T) {
    if (T(0, 0) > 2 * M) throw TruncationError("beyond the truncation");
    return T(0, 0) == 0 ? Rational(make_rational(1, 240)) : Rational(sigma3(T(0, 0).get_si() / 2));
  };
  std::vector<IntMatrix> cand;
  for (long m = 1; m <= 8; ++m) cand.push_back(IntMatrix{{2 * m}});
  for (long p : {3L, 5L}) {
    auto res = direct_apply(f, HeckeOp::TP, p, 4, 0, cand);
    CHECK(res.reps == static_cast<std::size_t>(p + 1));
    CHECK(res.values.size() == static_cast<std::size_t>(M / p));
    for (const auto& [S, v] : res.values) CHECK(v == Cyclotomic(Rational(1 + p * p * p) * f.coeff(S)));
  }
  // zero series
  SeriesQ z = f;
  z.coeff = [](const IntMatrix&) { return Rational(0); };
  auto r0 = direct_apply(z, HeckeOp::TP, 3, 4, 0, cand);
  for (const auto& [S, v] : r0.values) CHECK(v.is_zero());
}
