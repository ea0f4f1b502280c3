#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hsm/exactmath.hpp"
#include "hsm/finitequad.hpp"

namespace hsm {

// a + b*w in Q(sqrt d), w = sqrt d or (1 + sqrt d)/2 when d = 1 mod 4.
// d = 1 stands for Q; then b = 0. A rational element (b = 0) mixes with any d.
struct FieldElement {
  Rational a = 0, b = 0;
  long d = 1;

  FieldElement() = default;
  FieldElement(const Rational& a_, const Rational& b_ = 0, long d_ = 1) : a(a_), b(b_), d(d_) {}
  FieldElement(long x) : a(x), d(1) {}  // NOLINT

  bool is_rational() const { return b == 0; }
  bool is_zero() const { return a == 0 && b == 0; }
  bool is_integral() const { return is_integer(a) && is_integer(b); }
  bool operator==(const FieldElement& o) const { return a == o.a && b == o.b; }
  bool operator!=(const FieldElement& o) const { return !(*this == o); }
  FieldElement operator+(const FieldElement& o) const;
  FieldElement operator-(const FieldElement& o) const;
  FieldElement operator-() const { return {-a, -b, d}; }
  FieldElement operator*(const FieldElement& o) const;
  FieldElement operator/(const FieldElement& o) const;
  FieldElement conj() const;
  Rational norm() const;
  Rational trace() const;
  // Sign under the embedding w -> (c1 + s sqrt d)/2-style, s = +1 or -1.
  int sign(int s) const;
  bool totally_positive() const { return sign(1) > 0 && sign(-1) > 0; }
  std::string to_string() const;  // "3+2w", "1/2-w", "-w"
};

FieldElement parse_element(const std::string& s, long d);

// Fractional ideal: (1/den) * Z-span of the columns of H (coordinates in 1, w),
// H in column Hermite normal form, den minimal.
struct FracIdeal {
  long d = 1;
  Int den = 1;
  IntMatrix H;

  bool operator==(const FracIdeal& o) const { return d == o.d && den == o.den && H == o.H; }
  bool operator!=(const FracIdeal& o) const { return !(*this == o); }
  bool operator<(const FracIdeal& o) const;
  // Z-basis as field elements.
  std::vector<FieldElement> basis() const;
  std::string to_string() const;
};

struct PrimeIdeal {
  FracIdeal P;
  long p = 0;
  int e = 1;
  int f = 1;
  long norm() const {
    long n = 1;
    for (int i = 0; i < f; ++i) n *= p;
    return n;
  }
};

struct IdealClassGroup {
  std::vector<FracIdeal> reps;              // reps[0] = O
  std::vector<std::vector<int>> table;      // table[i][j] = class of reps[i]*reps[j]
  int h() const { return static_cast<int>(reps.size()); }
};

// Values of a character of the class group, indexed like IdealClassGroup::reps.
struct ClassCharacter {
  std::vector<Cyclotomic> values;
};

struct ResidueField {
  FqPtr F;
  PrimeIdeal P;
  int omega_image = 0;  // residue of w
};

class QuadField {
 public:
  explicit QuadField(long d);

  long d() const { return d_; }
  int degree() const { return d_ == 1 ? 1 : 2; }
  bool is_rational() const { return d_ == 1; }
  Int disc() const;
  // w^2 = c1 w + c0
  long c1() const { return c1_; }
  long c0() const { return c0_; }

  FieldElement elt(const Rational& a, const Rational& b = 0) const;
  FieldElement omega() const { return elt(0, 1); }
  FieldElement sqrt_d() const;  // exact sqrt(d) as an element

  // Ideals
  FracIdeal unit_ideal() const { return principal(elt(1)); }
  FracIdeal principal(const FieldElement& x) const;
  FracIdeal ideal(const std::vector<FieldElement>& gens) const;
  FracIdeal from_zbasis(const std::vector<FieldElement>& zgens) const;  // checks O-stability
  FracIdeal mul(const FracIdeal& A, const FracIdeal& B) const;
  FracIdeal add(const FracIdeal& A, const FracIdeal& B) const;
  FracIdeal inv(const FracIdeal& A) const;
  FracIdeal pow(const FracIdeal& A, long k) const;
  FracIdeal scale(const FracIdeal& A, const FieldElement& x) const;  // xA
  FracIdeal conj(const FracIdeal& A) const;
  Rational norm(const FracIdeal& A) const;
  bool contains(const FracIdeal& A, const FieldElement& x) const;
  bool is_integral(const FracIdeal& A) const { return A.den == 1; }
  bool subset(const FracIdeal& A, const FracIdeal& B) const;  // A inside B

  int ord(const PrimeIdeal& P, const FracIdeal& A) const;
  int ord(const PrimeIdeal& P, const FieldElement& x) const;  // x != 0

  std::vector<PrimeIdeal> primes_above(long p) const;
  // Prime ideals dividing A (A != 0), with multiplicities.
  std::vector<std::pair<PrimeIdeal, int>> factor(const FracIdeal& A) const;
  FracIdeal different() const;

  // Classes (wide sense). The key is a canonical reduced form of the class.
  std::pair<long, long> class_key(const FracIdeal& A) const;
  bool is_principal(const FracIdeal& A) const;
  std::optional<FieldElement> find_generator(const FracIdeal& A) const;
  FieldElement fundamental_unit() const;  // > 1 under the first embedding; 1 for Q
  const IdealClassGroup& class_group() const;
  int class_index(const FracIdeal& A) const;
  Cyclotomic chi(const ClassCharacter& chi, const FracIdeal& A, long e = 1) const;
  bool is_character(const ClassCharacter& chi) const;

  // Element alpha with ord_P(alpha) = v for every listed (P, v).
  FieldElement pick_with_orders(const std::vector<std::pair<PrimeIdeal, int>>& cons,
                                bool totally_positive = false) const;
  FieldElement uniformizer(const PrimeIdeal& P, const std::vector<PrimeIdeal>& avoid = {}) const;

  ResidueField residue_field(const PrimeIdeal& P) const;
  // Reduction of a P-integral element; throws when x is not P-integral.
  int reduce(const ResidueField& R, const FieldElement& x) const;
  // An element of O reducing to the given residue (inverse of reduce on lifts).
  FieldElement lift(const ResidueField& R, int residue) const;

 private:
  FracIdeal canonical(const IntMatrix& gens, const Int& den) const;
  IntMatrix coords(const std::vector<FieldElement>& xs, const Int& den) const;
  long d_;
  long c1_, c0_;
  mutable std::once_flag cg_once_;
  mutable std::unique_ptr<IdealClassGroup> cg_;
  mutable std::vector<std::pair<long, long>> cg_keys_;
};

using QuadFieldPtr = std::shared_ptr<const QuadField>;

bool is_squarefree(long d);

}  // namespace hsm
