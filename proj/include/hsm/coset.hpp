#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hsm/lattice.hpp"

namespace hsm {

// Gamma(I_1, ..., I_n; J).
struct GroupData {
  QuadFieldPtr K;
  int n = 0;
  std::vector<FracIdeal> I;
  FracIdeal J;
};

GroupData standard_group(QuadFieldPtr K, int n);

KMatrix to_kmatrix(const RatMatrix& M, long d = 1);

// Block memberships, symmetry of A tB and C tD, and A tD - B tC = uI with u a totally positive unit.
bool is_member(const KMatrix& M, const GroupData& G);
bool is_member_z(const RatMatrix& M);  // Sp_n(Z)

// f|M takes M_k(source) onto M_k(target): M g M^-1 lies in the source group for g in the target group.
struct OperatorMatrix {
  KMatrix M;
  GroupData source, target;
};

OperatorMatrix operator_U(const GroupData& G, int l, const FieldElement& alpha);
OperatorMatrix operator_W(const GroupData& G, const FieldElement& alpha);  // alpha >> 0
OperatorMatrix operator_V(const GroupData& G, int l, const FracIdeal& Q,
                          std::size_t budget = lattice_budget());  // 1 <= l < n
OperatorMatrix operator_S(const GroupData& G, int l, const FracIdeal& Q,
                          std::size_t budget = lattice_budget());

// (a b; c d) with a in X, b in Z1, c in Z2, d in Y and ad - bc = 1; needs XY = Z1 Z2 = O.
KMatrix det_one_completion(const QuadField& K, const FracIdeal& X, const FracIdeal& Z1, const FracIdeal& Z2,
                           const FracIdeal& Y, std::size_t budget = lattice_budget());

// Symmetric coprime lower pair over Z completed to Sp_n(Z).
// (C' | D') = (C | D) M with det C', det D' nonzero and coprime; G' = (A B; C' D'), G = G' M^-1.
struct Completion {
  IntMatrix G, Gprime, M;
};
Completion complete_coprime_pair(const IntMatrix& C, const IntMatrix& D, std::size_t budget = lattice_budget());

// Representative gamma in Sp_n(Z) of a coset (Gamma' cap Gamma) gamma; the operator uses delta^-1 gamma.
struct CosetRep {
  IntMatrix gamma;
  int r = -1;  // T(p): rank mod p of the A-block of gamma
};

RatMatrix delta_inverse_tp(int n, long p);          // diag(p^-1 I, I)
RatMatrix delta_inverse_tj(int n, long p, int j);   // diag(p^-1 I_j, I, p I_j, I)

// T(p): gamma = (diag(I_r, 0) U, diag(Y0, I) tU^-1; diag(0, -I) U, diag(I_r, 0) tU^-1),
// U completing an r-dimensional subspace of F_p^n, Y0 symmetric mod p.
std::vector<CosetRep> gen_reps_tp(int n, long p, std::size_t budget = lattice_budget());
// T_j(p^2): orbit of Z^{2n} delta^-1 under Sp_n(Z), tracked mod p^2.
std::vector<CosetRep> gen_reps_tj(int n, long p, int j, std::size_t budget = lattice_budget());
// Same orbit enumeration for an arbitrary delta^-1 (multiplier p^-1 or 1).
std::vector<CosetRep> orbit_reps(const RatMatrix& delta_inv, long p, std::size_t budget = lattice_budget());

// gamma gamma'^-1 outside Gamma' for every pair, Gamma' = delta Gamma delta^-1.
bool pairwise_inequivalent(const std::vector<CosetRep>& reps, const RatMatrix& delta_inv);

// Cardinalities from the lattice data: sum over Omega of the free parameters of each stratum.
Int structural_count_tp(int n, long p);
Int structural_count_tj(int n, long p, int j);
Int count_nonsingular_symmetric(int m, long p);

// g = h (A B; 0 D) with h in Sp_n(Z).
struct Triangular {
  RatMatrix A, B, D;
  Rational nu;  // A tD = nu I
};
Triangular triangularize(const RatMatrix& g, std::size_t budget = lattice_budget());

struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Level-one expansion over Q: T runs over even integral positive semi-definite n x n matrices,
// e{T tau} = exp(pi i tr(T tau)). coeff throws TruncationError outside the known range.
struct SeriesQ {
  int n = 1;
  std::function<Rational(const IntMatrix&)> coeff;
  std::function<bool(const IntMatrix&)> known;
};

enum class HeckeOp { TP, TJ, TJ_TILDE };

struct DirectResult {
  std::vector<std::pair<IntMatrix, Cyclotomic>> values;  // trusted window
  std::vector<IntMatrix> dropped;                        // some preimage outside the known range
  std::size_t reps = 0;
};

// Coefficients of f|T(p), f|T_j(p^2) or f|T~_j(p^2) at the candidate indices.
DirectResult direct_apply(const SeriesQ& f, HeckeOp op, long p, int k, int j, const std::vector<IntMatrix>& candidates,
                          std::size_t budget = lattice_budget());

bool is_even_integral_z(const RatMatrix& T);

}  // namespace hsm
