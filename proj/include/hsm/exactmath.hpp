#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hsm {

using Int = mpz_class;
using Rational = mpq_class;

// Raised when a desk-scale enumeration cap is hit; the CLI maps it to exit code 3.
struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Rational make_rational(const Int& num, const Int& den);
std::string to_string(const Int& x);
std::string to_string(const Rational& x);
// Accepts "p", "-p", "p/q".
Rational parse_rational(const std::string& s);

Int floor_div(const Int& a, const Int& b);
Int mod_floor(const Int& a, const Int& b);  // result in [0, |b|)
Int ipow(const Int& base, unsigned long e);
long long to_ll(const Int& x);  // throws if out of range
bool is_integer(const Rational& x);

template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : r_(rows), c_(cols), a_(rows * cols, T(0)) {}
  Matrix(std::size_t rows, std::size_t cols, const T& fill) : r_(rows), c_(cols), a_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<T>> init) {
    r_ = init.size();
    c_ = r_ ? init.begin()->size() : 0;
    a_.reserve(r_ * c_);
    for (const auto& row : init) {
      if (row.size() != c_) throw std::invalid_argument("ragged matrix literal");
      for (const auto& x : row) a_.push_back(x);
    }
  }

  static Matrix identity(std::size_t n, const T& one = T(1)) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = one;
    return m;
  }

  std::size_t rows() const { return r_; }
  std::size_t cols() const { return c_; }
  bool is_square() const { return r_ == c_; }

  T& operator()(std::size_t i, std::size_t j) { return a_[i * c_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return a_[i * c_ + j]; }

  bool operator==(const Matrix& o) const { return r_ == o.r_ && c_ == o.c_ && a_ == o.a_; }
  bool operator!=(const Matrix& o) const { return !(*this == o); }

  Matrix transpose() const {
    Matrix t(c_, r_);
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix block(std::size_t i0, std::size_t j0, std::size_t nr, std::size_t nc) const {
    Matrix b(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(i0 + i, j0 + j);
    return b;
  }

  void set_block(std::size_t i0, std::size_t j0, const Matrix& b) {
    for (std::size_t i = 0; i < b.rows(); ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) (*this)(i0 + i, j0 + j) = b(i, j);
  }

  bool is_zero() const {
    for (const auto& x : a_)
      if (!(x == T(0))) return false;
    return true;
  }

  bool is_symmetric() const {
    if (r_ != c_) return false;
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = i + 1; j < c_; ++j)
        if (!((*this)(i, j) == (*this)(j, i))) return false;
    return true;
  }

  Matrix operator+(const Matrix& o) const {
    check_same(o);
    Matrix s(*this);
    for (std::size_t k = 0; k < a_.size(); ++k) s.a_[k] = s.a_[k] + o.a_[k];
    return s;
  }
  Matrix operator-(const Matrix& o) const {
    check_same(o);
    Matrix s(*this);
    for (std::size_t k = 0; k < a_.size(); ++k) s.a_[k] = s.a_[k] - o.a_[k];
    return s;
  }
  Matrix operator-() const {
    Matrix s(*this);
    for (auto& x : s.a_) x = T(0) - x;
    return s;
  }
  Matrix operator*(const Matrix& o) const {
    if (c_ != o.r_) throw std::invalid_argument("matrix product dimension mismatch");
    Matrix p(r_, o.c_);
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t k = 0; k < c_; ++k) {
        const T& x = (*this)(i, k);
        if (x == T(0)) continue;
        for (std::size_t j = 0; j < o.c_; ++j) p(i, j) = p(i, j) + x * o(k, j);
      }
    return p;
  }
  Matrix scaled(const T& s) const {
    Matrix p(*this);
    for (auto& x : p.a_) x = s * x;
    return p;
  }

  const std::vector<T>& data() const { return a_; }

 private:
  void check_same(const Matrix& o) const {
    if (r_ != o.r_ || c_ != o.c_) throw std::invalid_argument("matrix shape mismatch");
  }
  std::size_t r_ = 0, c_ = 0;
  std::vector<T> a_;
};

using IntMatrix = Matrix<Int>;
using RatMatrix = Matrix<Rational>;

RatMatrix to_rational(const IntMatrix& m);
Int det(const IntMatrix& m);        // Bareiss
Rational det(const RatMatrix& m);
RatMatrix inverse(const RatMatrix& m);  // throws on singular input
std::size_t rank(const RatMatrix& m);
// Basis of the right kernel over Q, as columns.
RatMatrix kernel(const RatMatrix& m);
// Least common multiple of all entry denominators.
Int common_denominator(const RatMatrix& m);
IntMatrix scale_to_int(const RatMatrix& m, const Int& den);

// Column-style Hermite normal form: H = M*U lower-left echelon, positive pivots,
// entries left of each pivot reduced into [0, pivot), zero columns last.
struct HnfResult {
  IntMatrix H;
  IntMatrix U;
  std::size_t rank = 0;
};
HnfResult hnf(const IntMatrix& m);

// Basis of the integer right kernel (saturated), as columns.
IntMatrix int_kernel(const IntMatrix& m);

// D = U*M*V diagonal with d_1 | d_2 | ..., d_i >= 0.
struct SnfResult {
  IntMatrix D;
  IntMatrix U;
  IntMatrix V;
};
SnfResult snf(const IntMatrix& m);

// Element of Q(zeta_m) stored in the power basis 1, z, ..., z^(phi(m)-1),
// reduced modulo the m-th cyclotomic polynomial.
class Cyclotomic {
 public:
  Cyclotomic() : m_(1), c_{Rational(0)} {}
  Cyclotomic(const Rational& r) : m_(1), c_{r} {}  // NOLINT: implicit by design
  Cyclotomic(long r) : m_(1), c_{Rational(r)} {}   // NOLINT

  static Cyclotomic root_of_unity(unsigned long m, long long e);
  // Builds sum_e coeffs[e] * zeta_m^e for exponents 0..coeffs.size()-1.
  static Cyclotomic from_exponents(unsigned long m, const std::vector<Rational>& coeffs);

  unsigned long modulus() const { return m_; }
  const std::vector<Rational>& coeffs() const { return c_; }

  bool is_rational() const;
  Rational rational_value() const;  // throws unless is_rational()
  bool is_zero() const;

  Cyclotomic lifted(unsigned long M) const;  // requires m_ | M

  Cyclotomic operator+(const Cyclotomic& o) const;
  Cyclotomic operator-(const Cyclotomic& o) const;
  Cyclotomic operator-() const;
  Cyclotomic operator*(const Cyclotomic& o) const;
  Cyclotomic& operator+=(const Cyclotomic& o) { return *this = *this + o; }
  Cyclotomic& operator*=(const Cyclotomic& o) { return *this = *this * o; }
  Cyclotomic pow(long long e) const;  // negative e needs a root of unity or rational
  bool operator==(const Cyclotomic& o) const;
  bool operator!=(const Cyclotomic& o) const { return !(*this == o); }

  // "zeta3^2 - 1", "22/7", "0".
  std::string to_string() const;

 private:
  Cyclotomic(unsigned long m, std::vector<Rational> c) : m_(m), c_(std::move(c)) {}
  void trim_to_rational();
  unsigned long m_;
  std::vector<Rational> c_;
};

Cyclotomic cyclo_root_of_unity(unsigned long m, long long e);
// Exact square root of an odd prime p inside Q(zeta_{4p}) via the quadratic Gauss sum.
Cyclotomic cyclo_sqrt_prime(unsigned long p);
unsigned long euler_phi(unsigned long m);
// Integer coefficients of the m-th cyclotomic polynomial, constant term first.
const std::vector<Int>& cyclotomic_polynomial(unsigned long m);

// Accumulates exponent counts of zeta_m and reduces once.
class CycloAccumulator {
 public:
  explicit CycloAccumulator(unsigned long m) : m_(m), c_(m, Rational(0)) {}
  void add(long long e, const Rational& coeff = Rational(1));
  Cyclotomic value() const { return Cyclotomic::from_exponents(m_, c_); }
  const std::vector<Rational>& raw() const { return c_; }

 private:
  unsigned long m_;
  std::vector<Rational> c_;
};

}  // namespace hsm
