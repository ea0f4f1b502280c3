#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "hsm/exactmath.hpp"

namespace hsm {

// Finite field F_q, q = p^f with p odd. Elements are ints in [0, q): the base-p
// digits are the coefficients of a polynomial in x modulo the defining modulus.
class Fq {
 public:
  explicit Fq(int p, int f = 1);
  // modulus: monic, constant term first, degree f, irreducible mod p.
  Fq(int p, const std::vector<int>& modulus);

  int p() const { return p_; }
  int f() const { return f_; }
  int q() const { return q_; }
  const std::vector<int>& modulus() const { return modulus_; }

  int add(int a, int b) const { return add_[a * q_ + b]; }
  int mul(int a, int b) const { return mul_[a * q_ + b]; }
  int neg(int a) const { return neg_[a]; }
  int sub(int a, int b) const { return add_[a * q_ + neg_[b]]; }
  int inv(int a) const;
  int pow(int a, long long e) const;
  int from_int(long long n) const;   // image of an integer in the prime field
  int x() const { return f_ > 1 ? p_ : from_int(0); }  // class of x; only meaningful for f > 1
  int trace(int a) const { return trace_[a]; }  // absolute trace, in [0, p)
  bool is_square(int a) const { return square_[a]; }
  int half() const { return inv(from_int(2)); }

 private:
  void build(const std::vector<int>& modulus);
  int p_, f_, q_;
  std::vector<int> modulus_;
  std::vector<int> add_, mul_, neg_, inv_, trace_;
  std::vector<bool> square_;
};

using FqPtr = std::shared_ptr<const Fq>;
FqPtr make_fq(int p, int f = 1);

// Quadratic space with Q(v) = v^t G v over F_q.
struct QuadSpaceFq {
  FqPtr F;
  int dim = 0;
  std::vector<int> gram;  // row-major dim x dim, symmetric

  int at(int i, int j) const { return gram[i * dim + j]; }
  int value(const std::vector<int>& v) const;
  int bilinear(const std::vector<int>& u, const std::vector<int>& v) const;
};

QuadSpaceFq make_quadspace(FqPtr F, const std::vector<std::vector<long long>>& gram);

struct WittData {
  int r = 0;  // radical dimension
  int t = 0;  // hyperbolic planes
  int w = 0;  // anisotropic kernel dimension, 0..2
  bool operator==(const WittData& o) const { return r == o.r && t == o.t && w == o.w; }
};

struct WittDecomposition {
  WittData data;
  // Rows: r radical vectors, then t pairs (e_i, f_i) with Q(e)=Q(f)=0 and
  // B(e,f)=1, then w anisotropic vectors orthogonal to everything before.
  std::vector<std::vector<int>> basis;
};

// Rank and discriminant class only; no witness.
WittData witt_data(const QuadSpaceFq& V);
// Explicit splitting; anisotropy of the kernel is checked exhaustively.
WittDecomposition witt_decompose(const QuadSpaceFq& V);

// Gaussian binomial [m, r]_q and prod_{i<r} (q^{m-i} + 1).
Int beta(long m, long r, long q);
Int delta(long m, long r, long q);

// Number of totally isotropic l-dimensional subspaces.
Int count_isotropic_closed(const WittData& wd, long l, long q);
Int count_isotropic(const QuadSpaceFq& V, int l);
Int count_isotropic_brute(const QuadSpaceFq& V, int l);  // dim <= 6

// Totally isotropic subspaces of codimension n - j in a space of dimension m1.
Int alpha_j(const QuadSpaceFq& V, int j, int n);

// All m-dimensional subspaces of F_q^n as reduced row echelon bases.
std::vector<std::vector<std::vector<int>>> enumerate_subspaces(const Fq& F, int n, int m);

// sum over symmetric W mod P^e of psi(tr(T W)), psi(x) = zeta_p^{Tr(c x)}.
// T is an r x r symmetric matrix over F_q (the reduction of T mod P); the
// character has conductor P, so the P^2 case repeats the P case q^{r(r+1)/2} times.
Cyclotomic complete_symmetric_charsum(const Fq& F, const std::vector<int>& T, int r, int e, int c = 1);
Cyclotomic complete_symmetric_charsum_brute(const Fq& F, const std::vector<int>& T, int r, int e, int c = 1);

struct StratifyReport {
  int r1 = 0;
  int q = 0;
  std::vector<long long> stratum_pairs;     // number of (subspace, U) pairs per rank m
  std::vector<long long> stratum_matrices;  // symmetric matrices of rank m, counted directly
  bool bijective = false;                   // phi injective and onto each stratum
  bool partition = false;                   // strata cover all symmetric matrices once
  long long charsum_checked = 0;
  bool charsums_equal = false;
  bool ok() const { return bijective && partition && charsums_equal; }
};
StratifyReport rank_stratify(const Fq& F, int r1);

struct IsotropicGridReport {
  int q = 0;
  int dim = 0;
  long long matrices = 0;
  long long mismatches = 0;
};
// Closed form against exhaustive subspace checks over every symmetric Gram
// matrix of the given dimension.
IsotropicGridReport isotropic_grid(const Fq& F, int dim);

}  // namespace hsm
