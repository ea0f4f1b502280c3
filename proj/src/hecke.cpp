#include "hsm/hecke.hpp"

#include <stdexcept>

#include "hsm/finitequad.hpp"

namespace hsm {

namespace {

Cyclotomic norm_power(const PrimeIdeal& P, long E) {
  Rational q = Rational(P.norm());
  Rational r = 1;
  for (long i = 0; i < (E >= 0 ? E : -E); ++i) r *= q;
  return Cyclotomic(E >= 0 ? r : Rational(1) / r);
}

void check_context(const HeckeContext& ctx, const PseudoLattice& L) {
  if (ctx.P.p == 2) throw std::invalid_argument("dyadic primes are not supported");
  if (L.n != ctx.n) throw std::invalid_argument("lattice rank differs from the degree n");
  if (L.K->d() != ctx.K->d()) throw std::invalid_argument("lattice and context use different fields");
  if (!is_even_integral(L)) throw std::invalid_argument("Lambda^J is not even integral");
}

}  // namespace

HeckeContext make_context(QuadFieldPtr K, int n, int k, const PrimeIdeal& P, ClassCharacter chi) {
  if (n < 1 || k < 1) throw std::invalid_argument("need n >= 1 and k >= 1");
  if (P.p == 2) throw std::invalid_argument("dyadic primes are not supported");
  if (!chi.values.empty() && !K->is_character(chi)) throw std::invalid_argument("not a class group character");
  return {std::move(K), n, k, P, std::move(chi)};
}

ExponentData exponents_tj(const HeckeContext& ctx, int r0, int m1, int r2, int j) {
  int n = ctx.n;
  if (j < 1 || j > n) throw std::invalid_argument("T~_j needs 1 <= j <= n");
  if (r0 < 0 || m1 < 0 || r2 < 0 || r0 + m1 + r2 != n) throw std::invalid_argument("invalid invariant factor data");
  ExponentData x;
  x.r0 = r0;
  x.m1 = m1;
  x.r2 = r2;
  x.r1 = m1 - n + j;
  x.vanishes = x.r1 < 0;
  long k = ctx.k;
  // E_j = k(r2 - r0 + j) + r0(r0 + m1 + 1) + r1(r1 + 1)/2 - j(n + 1)
  x.E = k * (r2 - r0 + j) + static_cast<long>(r0) * (r0 + m1 + 1) + static_cast<long>(x.r1) * (x.r1 + 1) / 2 -
        static_cast<long>(j) * (n + 1);
  x.e = 2L * r2 + x.r1;
  if (x.e != r2 - r0 + j) throw std::logic_error("e_j identity failed");
  return x;
}

ExponentData exponent_tp(const HeckeContext& ctx, int r0, int m1, int r2) {
  int n = ctx.n;
  if (r2 != 0 || r0 < 0 || m1 < 0 || r0 + m1 != n) throw std::invalid_argument("Omega must lie between P Lambda and Lambda");
  ExponentData x;
  x.r0 = r0;
  x.m1 = m1;
  x.r1 = m1;
  // r counts the factor P in {Lambda:Omega}; with r = mult(O) the n = 1 case is not the classical T(p)
  int r = r0;
  long k = ctx.k;
  x.E = k * (n - r) + static_cast<long>(r) * (r + 1) / 2 - static_cast<long>(n) * (n + 1) / 2;
  x.e = n - r;
  return x;
}

Cyclotomic chi_power(const QuadField& K, const ClassCharacter& chi, const FracIdeal& P, long e) {
  if (chi.values.empty() || e == 0) return Cyclotomic(1);
  return K.chi(chi, P, e);
}

CoefficientOracle zero_oracle() {
  return {[](const LatticeKey&) { return Cyclotomic(0); }};
}

CoefficientOracle sum_oracle(const CoefficientOracle& f, const Cyclotomic& a, const CoefficientOracle& g,
                             const Cyclotomic& b) {
  return {[f, a, g, b](const LatticeKey& key) { return a * f.value(key) + b * g.value(key); }};
}

bool key_is_even_integral(const LatticeKey& key) {
  for (int i = 0; i < key.n; ++i)
    for (int j = i; j < key.n; ++j) {
      FieldElement x = key.at(i, j);
      if (i == j) x = x * FieldElement(make_rational(1, 2), 0, key.d);
      if (!x.is_integral()) return false;
    }
  return true;
}

HeckeResult apply_tp(const HeckeContext& ctx, const CoefficientOracle& f, const PseudoLattice& Lambda) {
  check_context(ctx, Lambda);
  const QuadField& K = *ctx.K;
  FracIdeal scaling = K.mul(Lambda.J, K.inv(ctx.P.P));
  HeckeResult res;
  for (const auto& om : enumerate_intermediate(Lambda, ctx.P, true)) {
    ExponentData x = exponent_tp(ctx, om.r0, om.m1, om.r2);
    HeckeTerm t;
    t.key = canonical_key(with_scaling(om.omega, scaling));
    t.r0 = om.r0;
    t.m1 = om.m1;
    t.r2 = om.r2;
    t.E = x.E;
    t.e = x.e;
    t.oracle_value = f.value(t.key);
    t.contribution = norm_power(ctx.P, x.E) * chi_power(K, ctx.chi, ctx.P.P, x.e) * t.oracle_value;
    res.coefficient += t.contribution;
    res.terms.push_back(std::move(t));
  }
  return res;
}

HeckeResult apply_tj_tilde(const HeckeContext& ctx, const CoefficientOracle& f, const PseudoLattice& Lambda, int j) {
  check_context(ctx, Lambda);
  if (j < 1 || j > ctx.n) throw std::invalid_argument("T~_j needs 1 <= j <= n");
  const QuadField& K = *ctx.K;
  HeckeResult res;
  for (const auto& om : enumerate_intermediate(Lambda, ctx.P, false)) {
    ExponentData x = exponents_tj(ctx, om.r0, om.m1, om.r2, j);
    if (x.vanishes) continue;
    HeckeTerm t;
    t.r0 = om.r0;
    t.m1 = om.m1;
    t.r2 = om.r2;
    t.E = x.E;
    t.e = x.e;
    t.alpha = alpha_j(residue_space(Lambda, om.omega, ctx.P), j, ctx.n);
    t.key = canonical_key(om.omega);
    if (t.alpha == 0) continue;
    t.oracle_value = f.value(t.key);
    t.contribution = norm_power(ctx.P, x.E) * chi_power(K, ctx.chi, ctx.P.P, x.e) * Cyclotomic(Rational(t.alpha)) *
                     t.oracle_value;
    res.coefficient += t.contribution;
    res.terms.push_back(std::move(t));
  }
  return res;
}

}  // namespace hsm
