#include "hsm/numberfield.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hsm {

namespace {

std::pair<long, long> omega_coeffs(long d) {
  if (d == 1) return {0, 0};
  if (d % 4 == 1) return {1, (d - 1) / 4};
  return {0, d};
}

long combine_d(const FieldElement& x, const FieldElement& y) {
  if (x.d == y.d) return x.d;
  if (x.b == 0 && y.b == 0) return std::max(x.d, y.d);
  if (x.b == 0 || x.d == 1) return y.d;
  if (y.b == 0 || y.d == 1) return x.d;
  throw std::invalid_argument("field elements from different fields");
}

// Sign of u + v sqrt(d).
int sign_surd(const Rational& u, const Rational& v, long d) {
  int su = sgn(u), sv = sgn(v);
  if (sv == 0) return su;
  if (su == 0 || su == sv) return sv;
  Rational lhs = u * u, rhs = v * v * d;
  if (lhs == rhs) return 0;
  return lhs > rhs ? su : sv;
}

long isqrt_floor(const Int& x) {
  Int r;
  mpz_sqrt(r.get_mpz_t(), x.get_mpz_t());
  return r.get_si();
}

std::vector<long> prime_factors(Int n) {
  std::vector<long> ps;
  n = abs(n);
  for (long p = 2; Int(p) * p <= n; ++p) {
    if (n % p != 0) continue;
    ps.push_back(p);
    while (n % p == 0) n /= p;
  }
  if (n > 1) ps.push_back(n.get_si());
  return ps;
}

}  // namespace

bool is_squarefree(long d) {
  if (d < 1) return false;
  for (long p = 2; p * p <= d; ++p)
    if (d % (p * p) == 0) return false;
  return true;
}

FieldElement FieldElement::operator+(const FieldElement& o) const { return {a + o.a, b + o.b, combine_d(*this, o)}; }
FieldElement FieldElement::operator-(const FieldElement& o) const { return {a - o.a, b - o.b, combine_d(*this, o)}; }

FieldElement FieldElement::operator*(const FieldElement& o) const {
  long dd = combine_d(*this, o);
  auto [c1, c0] = omega_coeffs(dd);
  Rational bb = b * o.b;
  return {a * o.a + bb * c0, a * o.b + o.a * b + bb * c1, dd};
}

FieldElement FieldElement::conj() const {
  auto [c1, c0] = omega_coeffs(d);
  (void)c0;
  return {a + b * c1, -b, d};
}

Rational FieldElement::norm() const {
  FieldElement n = *this * conj();
  return n.a;
}

Rational FieldElement::trace() const {
  auto [c1, c0] = omega_coeffs(d);
  (void)c0;
  return 2 * a + b * c1;
}

FieldElement FieldElement::operator/(const FieldElement& o) const {
  if (o.is_zero()) throw std::domain_error("division by zero field element");
  Rational n = o.norm();
  FieldElement num = *this * o.conj();
  return {num.a / n, num.b / n, num.d};
}

int FieldElement::sign(int s) const {
  auto [c1, c0] = omega_coeffs(d);
  (void)c0;
  if (b == 0 || d == 1) return sgn(a);
  // w = (c1 + sqrt d)/2 when c1 = 1, else sqrt d.
  if (c1 == 1) return sign_surd(a + b / 2, s * b / 2, d);
  return sign_surd(a, s * b, d);
}

std::string FieldElement::to_string() const {
  if (b == 0) return hsm::to_string(a);
  std::string out;
  if (a != 0) out = hsm::to_string(a);
  Rational ab = b < 0 ? Rational(-b) : b;
  if (b < 0)
    out += "-";
  else if (!out.empty())
    out += "+";
  if (ab != 1) out += hsm::to_string(ab) + "*";
  out += "w";
  return out;
}

FieldElement parse_element(const std::string& raw, long d) {
  std::string s;
  for (char c : raw)
    if (c != ' ') s.push_back(c);
  if (s.empty()) throw std::invalid_argument("empty field element");
  FieldElement x(Rational(0), Rational(0), d);
  // Split into signed terms.
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i + 1;
    while (j < s.size() && s[j] != '+' && s[j] != '-') ++j;
    std::string term = s.substr(i, j - i);
    i = j;
    bool neg = false;
    if (term[0] == '+' || term[0] == '-') {
      neg = term[0] == '-';
      term = term.substr(1);
    }
    if (term.empty()) throw std::invalid_argument("malformed field element: " + raw);
    Rational c = 1;
    bool is_w = false;
    if (term.back() == 'w') {
      is_w = true;
      term.pop_back();
      if (!term.empty() && term.back() == '*') term.pop_back();
      if (!term.empty()) c = parse_rational(term);
    } else {
      c = parse_rational(term);
    }
    if (neg) c = -c;
    if (is_w) {
      if (d == 1) throw std::invalid_argument("w is not defined over Q");
      x.b += c;
    } else {
      x.a += c;
    }
  }
  return x;
}

bool FracIdeal::operator<(const FracIdeal& o) const {
  if (den != o.den) return den < o.den;
  const auto& x = H.data();
  const auto& y = o.H.data();
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
}

std::vector<FieldElement> FracIdeal::basis() const {
  std::vector<FieldElement> out;
  for (std::size_t j = 0; j < H.cols(); ++j) {
    Rational a = make_rational(H(0, j), den);
    Rational b = H.rows() > 1 ? make_rational(H(1, j), den) : Rational(0);
    out.emplace_back(a, b, d);
  }
  return out;
}

std::string FracIdeal::to_string() const {
  std::ostringstream os;
  os << "<";
  auto b = basis();
  for (std::size_t i = 0; i < b.size(); ++i) os << (i ? ", " : "") << b[i].to_string();
  os << ">";
  return os.str();
}

QuadField::QuadField(long d) : d_(d) {
  if (!is_squarefree(d)) throw std::invalid_argument("field selector d must be a squarefree integer >= 1");
  auto [c1, c0] = omega_coeffs(d);
  c1_ = c1;
  c0_ = c0;
}

Int QuadField::disc() const {
  if (d_ == 1) return 1;
  return c1_ == 1 ? Int(d_) : Int(4 * d_);
}

FieldElement QuadField::elt(const Rational& a, const Rational& b) const {
  if (d_ == 1 && b != 0) throw std::invalid_argument("Q has no w");
  return {a, b, d_};
}

FieldElement QuadField::sqrt_d() const {
  if (d_ == 1) return elt(1);
  return c1_ == 1 ? elt(-1, 2) : elt(0, 1);
}

IntMatrix QuadField::coords(const std::vector<FieldElement>& xs, const Int& den) const {
  IntMatrix m(degree(), xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) {
    Rational a = xs[j].a * den, b = xs[j].b * den;
    if (!is_integer(a) || !is_integer(b)) throw std::logic_error("coords: denominator too small");
    m(0, j) = a.get_num();
    if (degree() == 2) m(1, j) = b.get_num();
  }
  return m;
}

FracIdeal QuadField::canonical(const IntMatrix& gens, const Int& den) const {
  auto h = hnf(gens);
  if (h.rank != static_cast<std::size_t>(degree())) throw std::invalid_argument("zero ideal");
  IntMatrix H = h.H.block(0, 0, degree(), degree());
  Int g = den;
  for (const auto& x : H.data()) g = gcd(g, x);
  FracIdeal A;
  A.d = d_;
  A.den = den / g;
  A.H = IntMatrix(H.rows(), H.cols());
  for (std::size_t i = 0; i < H.rows(); ++i)
    for (std::size_t j = 0; j < H.cols(); ++j) A.H(i, j) = H(i, j) / g;
  return A;
}

namespace {
Int lcm_den(const std::vector<FieldElement>& xs) {
  Int l = 1;
  for (const auto& x : xs) {
    mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), x.a.get_den_mpz_t());
    mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), x.b.get_den_mpz_t());
  }
  return l;
}
}  // namespace

FracIdeal QuadField::ideal(const std::vector<FieldElement>& gens) const {
  std::vector<FieldElement> z;
  for (const auto& g : gens) {
    if (g.is_zero()) continue;
    z.push_back(g);
    if (degree() == 2) z.push_back(g * omega());
  }
  if (z.empty()) throw std::invalid_argument("zero ideal");
  Int den = lcm_den(z);
  return canonical(coords(z, den), den);
}

FracIdeal QuadField::principal(const FieldElement& x) const { return ideal({x}); }

FracIdeal QuadField::from_zbasis(const std::vector<FieldElement>& zgens) const {
  Int den = lcm_den(zgens);
  FracIdeal A = canonical(coords(zgens, den), den);
  for (const auto& b : A.basis())
    if (!contains(A, b * omega())) throw std::invalid_argument("Z-module is not an O-module");
  return A;
}

FracIdeal QuadField::mul(const FracIdeal& A, const FracIdeal& B) const {
  std::vector<FieldElement> z;
  for (const auto& x : A.basis())
    for (const auto& y : B.basis()) z.push_back(x * y);
  Int den = lcm_den(z);
  return canonical(coords(z, den), den);
}

FracIdeal QuadField::add(const FracIdeal& A, const FracIdeal& B) const {
  auto z = A.basis();
  for (const auto& y : B.basis()) z.push_back(y);
  Int den = lcm_den(z);
  return canonical(coords(z, den), den);
}

FracIdeal QuadField::scale(const FracIdeal& A, const FieldElement& x) const {
  if (x.is_zero()) throw std::invalid_argument("zero ideal");
  std::vector<FieldElement> z;
  for (const auto& y : A.basis()) z.push_back(x * y);
  Int den = lcm_den(z);
  return canonical(coords(z, den), den);
}

FracIdeal QuadField::conj(const FracIdeal& A) const {
  std::vector<FieldElement> z;
  for (const auto& y : A.basis()) z.push_back(y.conj());
  Int den = lcm_den(z);
  return canonical(coords(z, den), den);
}

Rational QuadField::norm(const FracIdeal& A) const {
  Int det_h = abs(det(A.H));
  return make_rational(det_h, ipow(A.den, static_cast<unsigned long>(degree())));
}

FracIdeal QuadField::inv(const FracIdeal& A) const {
  Rational n = norm(A);
  if (degree() == 1) return principal(elt(1 / n));
  FracIdeal c = conj(A);
  return scale(c, elt(1 / n));
}

FracIdeal QuadField::pow(const FracIdeal& A, long k) const {
  FracIdeal base = k < 0 ? inv(A) : A;
  if (k < 0) k = -k;
  FracIdeal r = unit_ideal();
  while (k) {
    if (k & 1) r = mul(r, base);
    k >>= 1;
    if (k) base = mul(base, base);
  }
  return r;
}

bool QuadField::contains(const FracIdeal& A, const FieldElement& x) const {
  Rational a = x.a * A.den, b = x.b * A.den;
  if (!is_integer(a) || !is_integer(b)) return false;
  Int v0 = a.get_num(), v1 = b.get_num();
  if (degree() == 1) return v0 % A.H(0, 0) == 0;
  // H lower triangular: v = c0 * col0 + c1 * col1.
  if (v0 % A.H(0, 0) != 0) return false;
  Int c0 = v0 / A.H(0, 0);
  Int rest = v1 - c0 * A.H(1, 0);
  return rest % A.H(1, 1) == 0;
}

bool QuadField::subset(const FracIdeal& A, const FracIdeal& B) const {
  for (const auto& x : A.basis())
    if (!contains(B, x)) return false;
  return true;
}

int QuadField::ord(const PrimeIdeal& P, const FracIdeal& A) const {
  // ord(A) = ord(den A) - e * v_p(den)
  FracIdeal B = A;
  B.den = 1;
  int k = 0;
  FracIdeal Pinv = inv(P.P);
  while (subset(B, P.P)) {
    B = mul(B, Pinv);
    ++k;
  }
  Int den = A.den;
  int vp = 0;
  while (den % P.p == 0) {
    den /= P.p;
    ++vp;
  }
  return k - P.e * vp;
}

int QuadField::ord(const PrimeIdeal& P, const FieldElement& x) const {
  if (x.is_zero()) throw std::domain_error("ord of zero");
  return ord(P, principal(x));
}

std::vector<PrimeIdeal> QuadField::primes_above(long p) const {
  if (p < 2 || prime_factors(p).size() != 1 || prime_factors(p)[0] != p)
    throw std::invalid_argument("primes_above expects a rational prime");
  std::vector<PrimeIdeal> out;
  if (degree() == 1) {
    out.push_back({principal(elt(p)), p, 1, 1});
    return out;
  }
  // Dedekind-Kummer on x^2 - c1 x - c0 (Z[w] = O, so every p is admissible).
  std::vector<long> roots;
  for (long r = 0; r < p; ++r) {
    long v = ((r * r - c1_ * r - c0_) % p + p) % p;
    if (v == 0) roots.push_back(r);
  }
  if (roots.empty()) {
    out.push_back({principal(elt(p)), p, 1, 2});
  } else if (roots.size() == 1 || (p == 2 && roots.size() == 1)) {
    out.push_back({ideal({elt(p), omega() - elt(roots[0])}), p, 2, 1});
  } else {
    for (long r : roots) out.push_back({ideal({elt(p), omega() - elt(r)}), p, 1, 1});
  }
  // A double root mod p means ramification; check via the discriminant.
  if (roots.size() == 1 && disc() % p != 0) throw std::logic_error("primes_above: inconsistent factorisation");
  return out;
}

std::vector<std::pair<PrimeIdeal, int>> QuadField::factor(const FracIdeal& A) const {
  Rational n = norm(A);
  std::vector<long> ps = prime_factors(n.get_num());
  for (long p : prime_factors(n.get_den())) ps.push_back(p);
  std::sort(ps.begin(), ps.end());
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  std::vector<std::pair<PrimeIdeal, int>> out;
  for (long p : ps)
    for (const auto& P : primes_above(p)) {
      int v = ord(P, A);
      if (v) out.emplace_back(P, v);
    }
  return out;
}

FracIdeal QuadField::different() const {
  if (degree() == 1) return unit_ideal();
  return principal(c1_ == 1 ? elt(-1, 2) : elt(0, 2));
}

namespace {

// Continued fraction of (P + sqrt D)/Q with Q | D - P^2; complete quotients are
// recorded until one repeats. Convergent denominators q_{k-1}, q_{k-2} ride along.
struct CfStep {
  long P, Q;
  Int qk1, qk2;  // q_{k-1}, q_{k-2}
};

std::vector<CfStep> cf_orbit(long P, long Q, long D, std::size_t* cycle_start) {
  long s = isqrt_floor(Int(D));
  std::map<std::pair<long, long>, std::size_t> seen;
  std::vector<CfStep> out;
  Int q1 = 0, q2 = 1;
  for (std::size_t k = 0; k < 10000000; ++k) {
    auto key = std::make_pair(P, Q);
    auto it = seen.find(key);
    if (it != seen.end()) {
      *cycle_start = it->second;
      return out;
    }
    seen[key] = k;
    out.push_back({P, Q, q1, q2});
    long a;
    if (Q > 0)
      a = static_cast<long>(floor_div(Int(static_cast<long>(P + s)), Int(static_cast<long>(Q))).get_si());
    else
      a = static_cast<long>(floor_div(Int(static_cast<long>(P + s + 1)), Int(static_cast<long>(Q))).get_si());
    long P2 = a * Q - P;
    long num = D - P2 * P2;
    if (num % Q != 0) throw std::logic_error("continued fraction lost divisibility");
    long Q2 = num / Q;
    Int qn = a * q1 + q2;
    q2 = q1;
    q1 = qn;
    P = P2;
    Q = Q2;
  }
  throw std::length_error("continued fraction period too long");
}

}  // namespace

// Primitive integral form of A: A = m * [a, b + w] up to the rational factor.
namespace {
struct PrimitiveForm {
  Rational m;
  Int a, b;
};
}  // namespace

static PrimitiveForm primitive_form(const QuadField& K, const FracIdeal& A) {
  // Rows swapped so the HNF exposes [c*w + b', a] with a generating A cap Z.
  IntMatrix sw(2, 2);
  for (int j = 0; j < 2; ++j) {
    sw(0, j) = A.H(1, j);
    sw(1, j) = A.H(0, j);
  }
  auto h = hnf(sw);
  Int c = h.H(0, 0), bb = h.H(1, 0), a = h.H(1, 1);
  if (a % c != 0 || bb % c != 0) throw std::logic_error("primitive_form: not an O-module");
  (void)K;
  return {make_rational(c, A.den), a / c, bb / c};
}

std::pair<long, long> QuadField::class_key(const FracIdeal& A) const {
  if (degree() == 1) return {0, 0};
  auto pf = primitive_form(*this, A);
  long D = disc().get_si();
  long P = 2 * pf.b.get_si() + c1_, Q = 2 * pf.a.get_si();
  std::size_t start = 0;
  auto orb = cf_orbit(P, Q, D, &start);
  std::pair<long, long> best{orb[start].P, orb[start].Q};
  for (std::size_t k = start; k < orb.size(); ++k) best = std::min(best, std::make_pair(orb[k].P, orb[k].Q));
  return best;
}

bool QuadField::is_principal(const FracIdeal& A) const {
  if (degree() == 1) return true;
  return class_key(A) == class_key(unit_ideal());
}

std::optional<FieldElement> QuadField::find_generator(const FracIdeal& A) const {
  if (degree() == 1) {
    Rational g = make_rational(A.H(0, 0), A.den);
    return elt(g);
  }
  auto pf = primitive_form(*this, A);
  long D = disc().get_si();
  long P = 2 * pf.b.get_si() + c1_, Q = 2 * pf.a.get_si();
  std::size_t start = 0;
  auto orb = cf_orbit(P, Q, D, &start);
  FieldElement sq = sqrt_d();  // sqrt(D) = 2 sqrt d or sqrt d
  FieldElement rootD = c1_ == 1 ? sq : sq * elt(2);
  for (const auto& st : orb) {
    if (st.Q != 2 && st.Q != -2) continue;
    FieldElement theta = (elt(Rational(static_cast<long>(st.P))) + rootD) / elt(Rational(static_cast<long>(st.Q)));
    FieldElement lambda = elt(Rational(st.qk1)) * theta + elt(Rational(st.qk2));
    FieldElement g = elt(pf.m * Rational(pf.a)) / lambda;
    if (principal(g) != A) throw std::logic_error("find_generator: generator check failed");
    return g;
  }
  return std::nullopt;
}

FieldElement QuadField::fundamental_unit() const {
  if (degree() == 1) return elt(1);
  long D = disc().get_si();
  std::size_t start = 0;
  auto orb = cf_orbit(c1_, 2, D, &start);
  FieldElement sq = sqrt_d();
  FieldElement rootD = c1_ == 1 ? sq : sq * elt(2);
  // Walk one full period past the start so the first return is seen.
  long P = orb[0].P, Q = orb[0].Q;
  Int q1 = 0, q2 = 1;
  long s = isqrt_floor(Int(D));
  for (std::size_t k = 0; k < 2 * orb.size() + 2; ++k) {
    if (k > 0 && (Q == 2 || Q == -2)) {
      FieldElement theta = (elt(Rational(static_cast<long>(P))) + rootD) / elt(Rational(static_cast<long>(Q)));
      FieldElement eps = elt(Rational(q1)) * theta + elt(Rational(q2));
      Rational n = eps.norm();
      if (n != 1 && n != -1) throw std::logic_error("fundamental_unit: norm is not +-1");
      if (eps.sign(1) < 0) eps = -eps;
      return eps;
    }
    long a = Q > 0 ? floor_div(Int(static_cast<long>(P + s)), Int(static_cast<long>(Q))).get_si()
                        : floor_div(Int(static_cast<long>(P + s + 1)), Int(static_cast<long>(Q))).get_si();
    long P2 = a * Q - P;
    long Q2 = (D - P2 * P2) / Q;
    Int qn = a * q1 + q2;
    q2 = q1;
    q1 = qn;
    P = P2;
    Q = Q2;
  }
  throw std::logic_error("fundamental_unit: no unit found");
}

const IdealClassGroup& QuadField::class_group() const {
  Int D = disc();
  if (D > 4000) throw std::length_error("desk-scale limit: class group enumeration needs |disc| <= 4000");
  std::call_once(cg_once_, [this, D] {
    auto cg = std::make_unique<IdealClassGroup>();
    std::vector<std::pair<long, long>> keys;
    auto add_class = [&](const FracIdeal& A) {
      auto k = class_key(A);
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        keys.push_back(k);
        cg->reps.push_back(A);
      }
    };
    add_class(unit_ideal());
    if (degree() == 2) {
      // Integral ideals of norm <= sqrt(D)/2, built from prime powers.
      long bound = 1;
      while (Int(4) * (bound + 1) * (bound + 1) <= D) ++bound;
      std::vector<PrimeIdeal> primes;
      for (long p = 2; p <= bound; ++p)
        if (prime_factors(p).size() == 1 && prime_factors(p)[0] == p)
          for (const auto& P : primes_above(p))
            if (P.norm() <= bound) primes.push_back(P);
      std::vector<std::pair<FracIdeal, long>> ideals{{unit_ideal(), 1}};
      for (const auto& P : primes) {
        std::size_t cur = ideals.size();
        for (std::size_t i = 0; i < cur; ++i) {
          FracIdeal A = ideals[i].first;
          long n = ideals[i].second;
          while (n * P.norm() <= bound) {
            A = mul(A, P.P);
            n *= P.norm();
            ideals.emplace_back(A, n);
          }
        }
      }
      std::sort(ideals.begin(), ideals.end(),
                [](const auto& x, const auto& y) { return x.second != y.second ? x.second < y.second : x.first < y.first; });
      for (const auto& [A, n] : ideals) add_class(A);
    }
    cg_keys_ = keys;
    int h = static_cast<int>(cg->reps.size());
    cg->table.assign(h, std::vector<int>(h, 0));
    cg_ = std::move(cg);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < h; ++j) cg_->table[i][j] = class_index(mul(cg_->reps[i], cg_->reps[j]));
  });
  return *cg_;
}

int QuadField::class_index(const FracIdeal& A) const {
  if (degree() == 1) return 0;
  if (!cg_) class_group();
  auto k = class_key(A);
  auto it = std::find(cg_keys_.begin(), cg_keys_.end(), k);
  if (it == cg_keys_.end()) throw std::logic_error("class_index: class not among the enumerated classes");
  return static_cast<int>(it - cg_keys_.begin());
}

Cyclotomic QuadField::chi(const ClassCharacter& c, const FracIdeal& A, long e) const {
  if (e == 0) return Cyclotomic(1);
  return c.values.at(class_index(A)).pow(e);
}

bool QuadField::is_character(const ClassCharacter& c) const {
  const auto& cg = class_group();
  if (static_cast<int>(c.values.size()) != cg.h()) return false;
  if (c.values[0] != Cyclotomic(1)) return false;
  for (int i = 0; i < cg.h(); ++i)
    for (int j = 0; j < cg.h(); ++j)
      if (c.values[cg.table[i][j]] != c.values[i] * c.values[j]) return false;
  return true;
}

namespace {
// Small elements x + y w in order of growing box radius.
template <class F>
bool box_search(int deg, long radius, F&& visit) {
  for (long r = 1; r <= radius; ++r)
    for (long x = -r; x <= r; ++x)
      for (long y = (deg == 2 ? -r : 0); y <= (deg == 2 ? r : 0); ++y) {
        if (std::max(std::abs(x), std::abs(y)) != r && !(deg == 1 && std::abs(x) == r)) continue;
        if (visit(x, y)) return true;
      }
  return false;
}
}  // namespace

FieldElement QuadField::uniformizer(const PrimeIdeal& P, const std::vector<PrimeIdeal>& avoid) const {
  FieldElement found;
  bool ok = box_search(degree(), 200 + 4 * P.p, [&](long x, long y) {
    FieldElement c = elt(x, y);
    if (c.is_zero() || ord(P, c) != 1) return false;
    for (const auto& Q : avoid)
      if (Q.P != P.P && ord(Q, c) != 0) return false;
    found = c;
    return true;
  });
  if (!ok) throw std::runtime_error("uniformizer: search budget exceeded");
  return found;
}

FieldElement QuadField::pick_with_orders(const std::vector<std::pair<PrimeIdeal, int>>& cons,
                                         bool totally_positive) const {
  std::vector<PrimeIdeal> all;
  for (const auto& [P, v] : cons) {
    for (const auto& Q : all)
      if (Q.P == P.P) throw std::invalid_argument("pick_with_orders: repeated prime");
    all.push_back(P);
  }
  FieldElement alpha = elt(1);
  for (const auto& [P, v] : cons) {
    FieldElement pi = uniformizer(P, all);
    FieldElement pw = elt(1);
    for (int i = 0; i < std::abs(v); ++i) pw = pw * pi;
    alpha = v >= 0 ? alpha * pw : alpha / pw;
  }
  if (!totally_positive) return alpha;
  if (degree() == 1) return alpha.a < 0 ? -alpha : alpha;
  int s1 = alpha.sign(1), s2 = alpha.sign(-1);
  if (s1 > 0 && s2 > 0) return alpha;
  // Multiply by a small beta with the same sign pattern that is a unit at every constrained prime.
  FieldElement beta;
  bool ok = box_search(2, 500, [&](long x, long y) {
    FieldElement c = elt(x, y);
    if (c.is_zero() || c.sign(1) != s1 || c.sign(-1) != s2) return false;
    for (const auto& P : all)
      if (ord(P, c) != 0) return false;
    beta = c;
    return true;
  });
  if (!ok) throw std::runtime_error("pick_with_orders: sign search budget exceeded");
  return alpha * beta;
}

ResidueField QuadField::residue_field(const PrimeIdeal& P) const {
  if (P.p == 2) throw std::invalid_argument("dyadic prime rejected");
  ResidueField R;
  R.P = P;
  if (P.f == 1) {
    R.F = make_fq(static_cast<int>(P.p), 1);
    if (degree() == 2) {
      for (long r = 0; r < P.p; ++r)
        if (contains(P.P, omega() - elt(r))) {
          R.omega_image = static_cast<int>(r);
          break;
        }
    }
  } else {
    // O/P = F_p[x]/(x^2 - c1 x - c0), w -> x.
    R.F = std::make_shared<const Fq>(static_cast<int>(P.p), std::vector<int>{static_cast<int>(-c0_), static_cast<int>(-c1_), 1});
    R.omega_image = static_cast<int>(P.p);
  }
  return R;
}

int QuadField::reduce(const ResidueField& R, const FieldElement& x) const {
  const Fq& F = *R.F;
  auto red_int = [&](const FieldElement& y) {
    int a = F.from_int(mod_floor(y.a.get_num(), Int(R.P.p)).get_si());
    int b = F.from_int(mod_floor(y.b.get_num(), Int(R.P.p)).get_si());
    return F.add(a, F.mul(b, R.omega_image));
  };
  if (x.is_zero()) return 0;
  if (x.is_integral()) return red_int(x);
  if (ord(R.P, x) < 0) throw std::domain_error("reduce: element is not P-integral");
  // t in (xO + O)^{-1}, t not in P: then t and t x are integral.
  FracIdeal Dx = inv(add(principal(x), unit_ideal()));
  auto b = Dx.basis();
  std::vector<FieldElement> cands = b;
  if (b.size() == 2) cands.push_back(b[0] + b[1]);
  for (const auto& t : cands) {
    if (contains(R.P.P, t)) continue;
    return F.mul(red_int(t * x), F.inv(red_int(t)));
  }
  throw std::logic_error("reduce: no P-unit in the denominator ideal");
}

FieldElement QuadField::lift(const ResidueField& R, int residue) const {
  if (R.P.f == 1) return elt(residue);
  return elt(residue % R.P.p, residue / R.P.p);
}

}  // namespace hsm
