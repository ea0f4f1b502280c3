#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hsm/coset.hpp"
#include "hsm/lattice.hpp"

namespace hsm {

struct HeckeContext {
  QuadFieldPtr K;
  int n = 1;
  int k = 1;
  PrimeIdeal P;
  ClassCharacter chi;  // empty means trivial
};

HeckeContext make_context(QuadFieldPtr K, int n, int k, const PrimeIdeal& P, ClassCharacter chi = {});

// Invariants: r1 = m1 - n + j, e = 2 r2 + r1 = r2 - r0 + j, r0 + m1 + r2 = n.
struct ExponentData {
  int r0 = 0, m1 = 0, r1 = 0, r2 = 0;
  long E = 0;  // power of N(P)
  long e = 0;  // power of chi(P)
  bool vanishes = false;
};

ExponentData exponents_tj(const HeckeContext& ctx, int r0, int m1, int r2, int j);
// P Lambda <= Omega <= Lambda: r2 = 0 and r = r0, so Omega = Lambda gives E = k n - n(n+1)/2.
ExponentData exponent_tp(const HeckeContext& ctx, int r0, int m1, int r2);

Cyclotomic chi_power(const QuadField& K, const ClassCharacter& chi, const FracIdeal& P, long e);

// Total on keys of the right degree. May throw TruncationError for keys it cannot vouch for.
struct CoefficientOracle {
  std::function<Cyclotomic(const LatticeKey&)> value;
};

CoefficientOracle zero_oracle();
CoefficientOracle sum_oracle(const CoefficientOracle& f, const Cyclotomic& a, const CoefficientOracle& g,
                             const Cyclotomic& b);

struct HeckeTerm {
  LatticeKey key;  // key of the queried lattice with its scaling
  int r0 = 0, m1 = 0, r2 = 0;
  long E = 0, e = 0;
  Int alpha = 1;
  Cyclotomic oracle_value, contribution;
};

struct HeckeResult {
  Cyclotomic coefficient;
  std::vector<HeckeTerm> terms;
};

// Lambda^J-th coefficient of F|T(P): sum over P Lambda <= Omega <= Lambda of
// N(P)^E chi(P)^{n-r} c(Omega^{J P^-1}), E = k(n-r) + r(r+1)/2 - n(n+1)/2 with r = mult_P{Lambda:Omega}.
HeckeResult apply_tp(const HeckeContext& ctx, const CoefficientOracle& f, const PseudoLattice& Lambda);
// Lambda^J-th coefficient of F|T~_j(P^2): sum over P Lambda <= Omega <= P^-1 Lambda of
// N(P)^{E_j} chi(P)^{e_j} alpha_j(Omega, Lambda) c(Omega^J).
HeckeResult apply_tj_tilde(const HeckeContext& ctx, const CoefficientOracle& f, const PseudoLattice& Lambda, int j);

// Scaled Gram matrix of a key is even integral (diagonal in 2O, off-diagonal in O).
bool key_is_even_integral(const LatticeKey& key);

}  // namespace hsm
