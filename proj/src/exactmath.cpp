#include "hsm/exactmath.hpp"

#include <algorithm>
#include <climits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

namespace hsm {

Rational make_rational(const Int& num, const Int& den) {
  if (den == 0) throw std::invalid_argument("zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

std::string to_string(const Int& x) { return x.get_str(); }

std::string to_string(const Rational& x) {
  if (x.get_den() == 1) return x.get_num().get_str();
  return x.get_num().get_str() + "/" + x.get_den().get_str();
}

Rational parse_rational(const std::string& raw) {
  std::string s;
  for (char ch : raw)
    if (ch != ' ') s.push_back(ch);
  if (s.empty()) throw std::invalid_argument("empty rational");
  auto valid_int = [](const std::string& t, bool allow_sign) {
    std::size_t i = 0;
    if (allow_sign && !t.empty() && (t[0] == '-' || t[0] == '+')) i = 1;
    if (i >= t.size()) return false;
    for (; i < t.size(); ++i)
      if (t[i] < '0' || t[i] > '9') return false;
    return true;
  };
  auto slash = s.find('/');
  std::string num = s.substr(0, slash);
  std::string den = slash == std::string::npos ? "1" : s.substr(slash + 1);
  if (!valid_int(num, true) || !valid_int(den, false)) throw std::invalid_argument("malformed rational: " + raw);
  if (num[0] == '+') num = num.substr(1);
  return make_rational(Int(num), Int(den));
}

Int floor_div(const Int& a, const Int& b) {
  Int q;
  mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

Int mod_floor(const Int& a, const Int& b) {
  Int r;
  mpz_mod(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

Int ipow(const Int& base, unsigned long e) {
  Int r;
  mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
  return r;
}

long long to_ll(const Int& x) {
  if (!x.fits_slong_p()) throw std::overflow_error("integer does not fit in 64 bits");
  return x.get_si();
}

bool is_integer(const Rational& x) { return x.get_den() == 1; }

RatMatrix to_rational(const IntMatrix& m) {
  RatMatrix r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = Rational(m(i, j));
  return r;
}

Int det(const IntMatrix& m) {
  if (!m.is_square()) throw std::invalid_argument("det of non-square matrix");
  std::size_t n = m.rows();
  if (n == 0) return 1;
  IntMatrix a(m);
  Int prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a(k, k) == 0) {
      std::size_t s = k + 1;
      while (s < n && a(s, k) == 0) ++s;
      if (s == n) return 0;
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(s, j));
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        Int t = a(i, j) * a(k, k) - a(i, k) * a(k, j);
        mpz_divexact(a(i, j).get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
      }
    }
    prev = a(k, k);
  }
  return sign * a(n - 1, n - 1);
}

namespace {

// Reduced row echelon form in place; returns pivot columns.
std::vector<std::size_t> rref(RatMatrix& a) {
  std::vector<std::size_t> piv;
  std::size_t r = 0;
  for (std::size_t c = 0; c < a.cols() && r < a.rows(); ++c) {
    std::size_t s = r;
    while (s < a.rows() && a(s, c) == 0) ++s;
    if (s == a.rows()) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) std::swap(a(r, j), a(s, j));
    Rational inv = 1 / a(r, c);
    for (std::size_t j = 0; j < a.cols(); ++j) a(r, j) *= inv;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      if (i == r || a(i, c) == 0) continue;
      Rational f = a(i, c);
      for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) -= f * a(r, j);
    }
    piv.push_back(c);
    ++r;
  }
  return piv;
}

}  // namespace

Rational det(const RatMatrix& m) {
  if (!m.is_square()) throw std::invalid_argument("det of non-square matrix");
  RatMatrix a(m);
  std::size_t n = a.rows();
  Rational d = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t s = c;
    while (s < n && a(s, c) == 0) ++s;
    if (s == n) return 0;
    if (s != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(s, j));
      d = -d;
    }
    d *= a(c, c);
    for (std::size_t i = c + 1; i < n; ++i) {
      if (a(i, c) == 0) continue;
      Rational f = a(i, c) / a(c, c);
      for (std::size_t j = c; j < n; ++j) a(i, j) -= f * a(c, j);
    }
  }
  return d;
}

RatMatrix inverse(const RatMatrix& m) {
  if (!m.is_square()) throw std::invalid_argument("inverse of non-square matrix");
  std::size_t n = m.rows();
  RatMatrix aug(n, 2 * n);
  aug.set_block(0, 0, m);
  aug.set_block(0, n, RatMatrix::identity(n));
  auto piv = rref(aug);
  if (piv.size() < n || piv[n - 1] != n - 1) throw std::domain_error("singular matrix");
  return aug.block(0, n, n, n);
}

std::size_t rank(const RatMatrix& m) {
  RatMatrix a(m);
  return rref(a).size();
}

RatMatrix kernel(const RatMatrix& m) {
  RatMatrix a(m);
  auto piv = rref(a);
  std::vector<bool> is_piv(m.cols(), false);
  for (auto c : piv) is_piv[c] = true;
  std::vector<std::size_t> free_cols;
  for (std::size_t c = 0; c < m.cols(); ++c)
    if (!is_piv[c]) free_cols.push_back(c);
  RatMatrix k(m.cols(), free_cols.size());
  for (std::size_t f = 0; f < free_cols.size(); ++f) {
    k(free_cols[f], f) = 1;
    for (std::size_t r = 0; r < piv.size(); ++r) k(piv[r], f) = -a(r, free_cols[f]);
  }
  return k;
}

Int common_denominator(const RatMatrix& m) {
  Int l = 1;
  for (const auto& x : m.data()) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), x.get_den_mpz_t());
  return l;
}

IntMatrix scale_to_int(const RatMatrix& m, const Int& den) {
  IntMatrix r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      Rational x = m(i, j) * den;
      if (x.get_den() != 1) throw std::domain_error("scale_to_int: non-integral entry");
      r(i, j) = x.get_num();
    }
  return r;
}

namespace {

void col_combine(IntMatrix& a, std::size_t k, std::size_t j, const Int& s, const Int& t, const Int& u,
                 const Int& v) {
  // (col_k, col_j) <- (s col_k + t col_j, u col_k + v col_j)
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Int x = a(i, k), y = a(i, j);
    a(i, k) = s * x + t * y;
    a(i, j) = u * x + v * y;
  }
}

void col_axpy(IntMatrix& a, std::size_t dst, std::size_t src, const Int& f) {
  if (f == 0) return;
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, dst) -= f * a(i, src);
}

void col_swap(IntMatrix& a, std::size_t x, std::size_t y) {
  for (std::size_t i = 0; i < a.rows(); ++i) std::swap(a(i, x), a(i, y));
}

void col_neg(IntMatrix& a, std::size_t x) {
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, x) = -a(i, x);
}

}  // namespace

HnfResult hnf(const IntMatrix& m) {
  HnfResult res{m, IntMatrix::identity(m.cols()), 0};
  IntMatrix& H = res.H;
  IntMatrix& U = res.U;
  std::size_t k = 0;
  for (std::size_t i = 0; i < m.rows() && k < m.cols(); ++i) {
    for (std::size_t j = k + 1; j < m.cols(); ++j) {
      if (H(i, j) == 0) continue;
      if (H(i, k) == 0) {
        col_swap(H, k, j);
        col_swap(U, k, j);
        continue;
      }
      Int g, s, t;
      mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), H(i, k).get_mpz_t(), H(i, j).get_mpz_t());
      Int u = -H(i, j) / g, v = H(i, k) / g;
      col_combine(H, k, j, s, t, u, v);
      col_combine(U, k, j, s, t, u, v);
    }
    if (H(i, k) == 0) continue;
    if (H(i, k) < 0) {
      col_neg(H, k);
      col_neg(U, k);
    }
    for (std::size_t j = 0; j < k; ++j) {
      Int f = floor_div(H(i, j), H(i, k));
      col_axpy(H, j, k, f);
      col_axpy(U, j, k, f);
    }
    ++k;
  }
  res.rank = k;
  return res;
}

IntMatrix int_kernel(const IntMatrix& m) {
  auto h = hnf(m);
  std::size_t nk = m.cols() - h.rank;
  return h.U.block(0, h.rank, m.cols(), nk);
}

SnfResult snf(const IntMatrix& m) {
  std::size_t R = m.rows(), C = m.cols();
  IntMatrix D(m);
  IntMatrix U = IntMatrix::identity(R), V = IntMatrix::identity(C);
  auto row_swap = [](IntMatrix& a, std::size_t x, std::size_t y) {
    for (std::size_t j = 0; j < a.cols(); ++j) std::swap(a(x, j), a(y, j));
  };
  auto row_axpy = [](IntMatrix& a, std::size_t dst, std::size_t src, const Int& f) {
    if (f == 0) return;
    for (std::size_t j = 0; j < a.cols(); ++j) a(dst, j) -= f * a(src, j);
  };
  std::size_t n = std::min(R, C);
  for (std::size_t t = 0; t < n; ++t) {
    for (;;) {
      // Bring the smallest nonzero entry of the trailing block to (t,t).
      std::size_t bi = R, bj = C;
      for (std::size_t i = t; i < R; ++i)
        for (std::size_t j = t; j < C; ++j)
          if (D(i, j) != 0 && (bi == R || abs(D(i, j)) < abs(D(bi, bj)))) bi = i, bj = j;
      if (bi == R) return {D, U, V};
      if (bi != t) {
        row_swap(D, t, bi);
        row_swap(U, t, bi);
      }
      if (bj != t) {
        col_swap(D, t, bj);
        col_swap(V, t, bj);
      }
      bool clean = true;
      for (std::size_t i = t + 1; i < R; ++i) {
        Int f = floor_div(D(i, t), D(t, t));
        row_axpy(D, i, t, f);
        row_axpy(U, i, t, f);
        if (D(i, t) != 0) clean = false;
      }
      for (std::size_t j = t + 1; j < C; ++j) {
        Int f = floor_div(D(t, j), D(t, t));
        col_axpy(D, j, t, f);
        col_axpy(V, j, t, f);
        if (D(t, j) != 0) clean = false;
      }
      if (!clean) continue;
      // Divisibility: pivot must divide every trailing entry.
      std::size_t bad = R;
      for (std::size_t i = t + 1; i < R && bad == R; ++i)
        for (std::size_t j = t + 1; j < C; ++j)
          if (D(i, j) % D(t, t) != 0) {
            bad = i;
            break;
          }
      if (bad == R) break;
      row_axpy(D, t, bad, Int(-1));
      row_axpy(U, t, bad, Int(-1));
    }
    if (D(t, t) < 0) {
      for (std::size_t j = 0; j < C; ++j) D(t, j) = -D(t, j);
      for (std::size_t j = 0; j < R; ++j) U(t, j) = -U(t, j);
    }
  }
  return {D, U, V};
}

// ---- cyclotomic ----

unsigned long euler_phi(unsigned long m) {
  if (m == 0) throw std::invalid_argument("euler_phi(0)");
  unsigned long r = m, x = m;
  for (unsigned long p = 2; p * p <= x; ++p) {
    if (x % p) continue;
    while (x % p == 0) x /= p;
    r -= r / p;
  }
  if (x > 1) r -= r / x;
  return r;
}

const std::vector<Int>& cyclotomic_polynomial(unsigned long m) {
  static std::mutex mu;
  static std::map<unsigned long, std::vector<Int>> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(m);
    if (it != cache.end()) return it->second;
  }
  if (m == 0) throw std::invalid_argument("cyclotomic_polynomial(0)");
  // x^m - 1 divided by Phi_d for every proper divisor d.
  std::vector<Int> num(m + 1, Int(0));
  num[0] = -1;
  num[m] = 1;
  for (unsigned long d = 1; d < m; ++d) {
    if (m % d) continue;
    const auto& den = cyclotomic_polynomial(d);
    std::size_t dn = den.size() - 1;
    std::vector<Int> q(num.size() - dn, Int(0));
    for (std::size_t i = num.size() - 1; i + 1 > dn; --i) {
      Int c = num[i];  // den is monic
      q[i - dn] = c;
      if (c != 0)
        for (std::size_t s = 0; s <= dn; ++s) num[i - dn + s] -= c * den[s];
      if (i == dn) break;
    }
    num = q;
  }
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(m, std::move(num)).first->second;
}

namespace {

std::vector<Rational> reduce_mod_phi(unsigned long m, std::vector<Rational> c) {
  const auto& phi = cyclotomic_polynomial(m);
  std::size_t deg = phi.size() - 1;
  for (std::size_t i = c.size(); i-- > deg;) {
    if (c[i] == 0) continue;
    Rational f = c[i];
    for (std::size_t s = 0; s <= deg; ++s)
      if (phi[s] != 0) c[i - deg + s] -= f * phi[s];
  }
  c.resize(deg, Rational(0));
  return c;
}

unsigned long lcm_ul(unsigned long a, unsigned long b) { return a / std::gcd(a, b) * b; }

}  // namespace

Cyclotomic Cyclotomic::from_exponents(unsigned long m, const std::vector<Rational>& coeffs) {
  if (m == 0) throw std::invalid_argument("cyclotomic modulus 0");
  std::vector<Rational> folded(m, Rational(0));
  for (std::size_t e = 0; e < coeffs.size(); ++e)
    if (coeffs[e] != 0) folded[e % m] += coeffs[e];
  Cyclotomic z(m, reduce_mod_phi(m, std::move(folded)));
  z.trim_to_rational();
  return z;
}

Cyclotomic Cyclotomic::root_of_unity(unsigned long m, long long e) {
  if (m == 0) throw std::invalid_argument("cyclotomic modulus 0");
  long long mm = static_cast<long long>(m);
  long long r = ((e % mm) + mm) % mm;
  std::vector<Rational> c(m, Rational(0));
  c[static_cast<std::size_t>(r)] = 1;
  return from_exponents(m, c);
}

Cyclotomic cyclo_root_of_unity(unsigned long m, long long e) { return Cyclotomic::root_of_unity(m, e); }

void Cyclotomic::trim_to_rational() {
  for (std::size_t i = 1; i < c_.size(); ++i)
    if (c_[i] != 0) return;
  Rational r = c_.empty() ? Rational(0) : c_[0];
  m_ = 1;
  c_.assign(1, r);
}

bool Cyclotomic::is_rational() const { return m_ == 1; }

Rational Cyclotomic::rational_value() const {
  if (!is_rational()) throw std::domain_error("cyclotomic value is not rational: " + to_string());
  return c_[0];
}

bool Cyclotomic::is_zero() const { return m_ == 1 && c_[0] == 0; }

Cyclotomic Cyclotomic::lifted(unsigned long M) const {
  if (M % m_) throw std::invalid_argument("lift target not a multiple of the modulus");
  if (M == m_) return *this;
  unsigned long s = M / m_;
  std::vector<Rational> c(M, Rational(0));
  for (std::size_t e = 0; e < c_.size(); ++e) c[e * s] = c_[e];
  return Cyclotomic(M, reduce_mod_phi(M, std::move(c)));
}

Cyclotomic Cyclotomic::operator+(const Cyclotomic& o) const {
  unsigned long M = lcm_ul(m_, o.m_);
  Cyclotomic a = lifted(M), b = o.lifted(M);
  for (std::size_t i = 0; i < a.c_.size(); ++i) a.c_[i] += b.c_[i];
  a.trim_to_rational();
  return a;
}

Cyclotomic Cyclotomic::operator-() const {
  Cyclotomic a(*this);
  for (auto& x : a.c_) x = -x;
  return a;
}

Cyclotomic Cyclotomic::operator-(const Cyclotomic& o) const { return *this + (-o); }

Cyclotomic Cyclotomic::operator*(const Cyclotomic& o) const {
  if (m_ == 1) {
    Cyclotomic a(o);
    for (auto& x : a.c_) x *= c_[0];
    a.trim_to_rational();
    return a;
  }
  if (o.m_ == 1) return o * *this;
  unsigned long M = lcm_ul(m_, o.m_);
  Cyclotomic a = lifted(M), b = o.lifted(M);
  std::vector<Rational> prod(a.c_.size() + b.c_.size(), Rational(0));
  for (std::size_t i = 0; i < a.c_.size(); ++i) {
    if (a.c_[i] == 0) continue;
    for (std::size_t j = 0; j < b.c_.size(); ++j)
      if (b.c_[j] != 0) prod[i + j] += a.c_[i] * b.c_[j];
  }
  Cyclotomic r(M, reduce_mod_phi(M, std::move(prod)));
  r.trim_to_rational();
  return r;
}

Cyclotomic Cyclotomic::pow(long long e) const {
  Cyclotomic base = *this;
  if (e < 0) {
    if (is_zero()) throw std::domain_error("zero to a negative power");
    if (is_rational()) {
      base = Cyclotomic(1 / c_[0]);
    } else {
      // Solve x * this = 1 via the multiplication matrix in the power basis.
      std::size_t d = c_.size();
      RatMatrix mult(d, d);
      for (std::size_t j = 0; j < d; ++j) {
        std::vector<Rational> basis(d, Rational(0));
        basis[j] = 1;
        Cyclotomic col = Cyclotomic(m_, basis) * *this;
        Cyclotomic lc = col.lifted(m_);
        for (std::size_t i = 0; i < d; ++i) mult(i, j) = lc.c_[i];
      }
      RatMatrix rhs(d, 1);
      rhs(0, 0) = 1;
      RatMatrix x = inverse(mult) * rhs;
      std::vector<Rational> xc(d);
      for (std::size_t i = 0; i < d; ++i) xc[i] = x(i, 0);
      base = Cyclotomic(m_, xc);
      base.trim_to_rational();
    }
    e = -e;
  }
  Cyclotomic r(1);
  while (e > 0) {
    if (e & 1) r = r * base;
    e >>= 1;
    if (e) base = base * base;
  }
  return r;
}

bool Cyclotomic::operator==(const Cyclotomic& o) const {
  if (m_ == o.m_) return c_ == o.c_;
  unsigned long M = lcm_ul(m_, o.m_);
  return lifted(M).c_ == o.lifted(M).c_;
}

std::string Cyclotomic::to_string() const {
  if (is_rational()) return hsm::to_string(c_[0]);
  std::ostringstream os;
  bool first = true;
  for (std::size_t i = c_.size(); i-- > 0;) {
    const Rational& x = c_[i];
    if (x == 0) continue;
    bool neg = x < 0;
    Rational ax = neg ? Rational(-x) : x;
    if (first)
      os << (neg ? "-" : "");
    else
      os << (neg ? " - " : " + ");
    first = false;
    if (i == 0) {
      os << hsm::to_string(ax);
      continue;
    }
    if (ax != 1) os << hsm::to_string(ax) << "*";
    os << "zeta" << m_;
    if (i > 1) os << "^" << i;
  }
  return os.str();
}

Cyclotomic cyclo_sqrt_prime(unsigned long p) {
  if (p < 3 || p % 2 == 0) throw std::invalid_argument("cyclo_sqrt_prime expects an odd prime");
  CycloAccumulator g(p);
  for (unsigned long x = 0; x < p; ++x) g.add(static_cast<long long>((x * x) % p));
  Cyclotomic gauss = g.value();
  if (p % 4 == 1) return gauss;
  return Cyclotomic::root_of_unity(4, 3) * gauss;
}

void CycloAccumulator::add(long long e, const Rational& coeff) {
  long long mm = static_cast<long long>(m_);
  c_[static_cast<std::size_t>(((e % mm) + mm) % mm)] += coeff;
}

}  // namespace hsm
