#include "hsm/oracles.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace hsm {

namespace {

// Simple roots of E8 in doubled coordinates; the lattice is {x all even or all odd, sum x = 0 mod 4}.
const std::array<std::array<int, 8>, 8> kSimple = {{
    {1, -1, -1, -1, -1, -1, -1, 1},
    {2, 2, 0, 0, 0, 0, 0, 0},
    {-2, 2, 0, 0, 0, 0, 0, 0},
    {0, -2, 2, 0, 0, 0, 0, 0},
    {0, 0, -2, 2, 0, 0, 0, 0},
    {0, 0, 0, -2, 2, 0, 0, 0},
    {0, 0, 0, 0, -2, 2, 0, 0},
    {0, 0, 0, 0, 0, -2, 2, 0},
}};

template <class V>
int dot8(const V& x, const std::array<int, 8>& a) {
  int s = 0;
  for (int i = 0; i < 8; ++i) s += x[i] * a[i];
  return s;
}

// Unique dominant element of the Weyl orbit.
template <class V>
V dominant(V x) {
  for (bool moved = true; moved;) {
    moved = false;
    for (const auto& a : kSimple) {
      int d = dot8(x, a);
      if (d < 0) {
        int c = d / 4;  // <v, alpha> with alpha.alpha = 2
        for (int i = 0; i < 8; ++i) x[i] = static_cast<typename V::value_type>(x[i] - c * a[i]);
        moved = true;
      }
    }
  }
  return x;
}

Int sigma(long w, long m) {
  Int s = 0;
  for (long d = 1; d * d <= m; ++d)
    if (m % d == 0) {
      s += ipow(Int(d), w);
      if (d != m / d) s += ipow(Int(m / d), w);
    }
  return s;
}

}  // namespace

std::array<Int, 3> reduce_binary(const IntMatrix& T) {
  if (T.rows() != 2 || T.cols() != 2 || T(0, 1) != T(1, 0)) throw std::invalid_argument("expected a symmetric 2x2 matrix");
  if (T(0, 0) % 2 != 0 || T(1, 1) % 2 != 0) throw std::invalid_argument("expected an even diagonal");
  Int a = T(0, 0) / 2, b = T(0, 1), c = T(1, 1) / 2;
  if (4 * a * c - b * b < 0 || a < 0 || c < 0) throw std::invalid_argument("form is not positive semi-definite");
  while (true) {
    if (a > c) std::swap(a, c);
    if (a == 0) {
      if (b != 0) throw std::logic_error("semi-definite reduction");
      break;
    }
    if (abs(b) <= a) break;
    // b -> b - 2ka, c -> a k^2 - b k + c with k nearest to b / 2a
    Int k = floor_div(b + a, 2 * a);
    Int nb = b - 2 * k * a;
    c = a * k * k - b * k + c;
    b = nb;
  }
  return {a, abs(b), c};
}

E8Theta2::E8Theta2(long qmax) : qmax_(qmax) {
  if (qmax < 1 || qmax > 40) throw std::invalid_argument("E8 theta: qmax must lie in [1, 40]");
  long limit = 8 * qmax;  // sum of squares of doubled coordinates
  std::vector<std::vector<Vec>> by_norm(qmax + 1);
  Vec x{};
  std::function<void(int, long, long, int)> rec = [&](int i, long used, long sum, int parity) {
    if (i == 8) {
      if (((sum % 4) + 4) % 4 != 0) return;
      by_norm[used / 8].push_back(x);
      return;
    }
    long rest = limit - used;
    long m = static_cast<long>(std::sqrt(static_cast<double>(rest)));
    while (m * m > rest) --m;
    while ((m + 1) * (m + 1) <= rest) ++m;
    for (long v = -m; v <= m; ++v) {
      if (((v % 2) + 2) % 2 != parity) continue;
      x[i] = static_cast<std::int8_t>(v);
      rec(i + 1, used + v * v, sum + v, parity);
    }
  };
  rec(0, 0, 0, 0);
  rec(0, 0, 0, 1);
  start_.assign(qmax + 2, 0);
  for (long m = 0; m <= qmax; ++m) {
    start_[m] = vecs_.size();
    vecs_.insert(vecs_.end(), by_norm[m].begin(), by_norm[m].end());
  }
  start_[qmax + 1] = vecs_.size();
}

std::size_t E8Theta2::shell_size(long m) const {
  if (m < 0 || m > qmax_) throw std::out_of_range("shell beyond the enumeration");
  return start_[m + 1] - start_[m];
}

bool E8Theta2::known(const IntMatrix& T) const {
  auto r = reduce_binary(T);
  return r[2] <= qmax_;
}

const std::vector<long long>& E8Theta2::histogram(const Vec& v1) const {
  auto it = hist_.find(v1);
  if (it != hist_.end()) return it->second;
  long width = 4 * qmax_ + 1;
  std::vector<long long> h((qmax_ + 1) * width, 0);
  for (long c = 0; c <= qmax_; ++c)
    for (std::size_t i = start_[c]; i < start_[c + 1]; ++i) {
      const Vec& v = vecs_[i];
      int s = 0;
      for (int t = 0; t < 8; ++t) s += v1[t] * v[t];
      long b = s / 4;
      h[c * width + b + 2 * qmax_] += 1;
    }
  return hist_.emplace(v1, std::move(h)).first->second;
}

Int E8Theta2::coefficient(const IntMatrix& T) const {
  auto r = reduce_binary(T);
  if (r[2] > qmax_) throw TruncationError("E8 theta coefficient beyond the enumerated shells");
  long a = r[0].get_si(), b = r[1].get_si(), c = r[2].get_si();
  std::lock_guard<std::mutex> lock(mu_);
  auto it = orbits_.find(a);
  if (it == orbits_.end()) {
    std::map<Vec, Int> count;
    for (std::size_t i = start_[a]; i < start_[a + 1]; ++i) count[dominant(vecs_[i])] += 1;
    it = orbits_.emplace(a, std::vector<std::pair<Vec, Int>>(count.begin(), count.end())).first;
  }
  long width = 4 * qmax_ + 1;
  Int total = 0;
  for (const auto& [rep, size] : it->second) total += size * static_cast<long>(histogram(rep)[c * width + b + 2 * qmax_]);
  return total;
}

SeriesQ E8Theta2::series() const {
  SeriesQ s;
  s.n = 2;
  s.known = [this](const IntMatrix& T) { return known(T); };
  s.coeff = [this](const IntMatrix& T) { return Rational(coefficient(T)); };
  return s;
}

namespace {
bool key_matrix_z(const LatticeKey& key, IntMatrix& T) {
  if (key.d != 1) throw std::invalid_argument("oracle is defined over Q only");
  if (!key_is_even_integral(key)) return false;
  T = IntMatrix(key.n, key.n);
  for (int i = 0; i < key.n; ++i)
    for (int j = 0; j < key.n; ++j) T(i, j) = key.at(i, j).a.get_num();
  return true;
}
}  // namespace

CoefficientOracle E8Theta2::oracle() const {
  return {[this](const LatticeKey& key) {
    if (key.n != 2) throw std::invalid_argument("E8 theta oracle has degree 2");
    IntMatrix T;
    if (!key_matrix_z(key, T)) return Cyclotomic(0);
    return Cyclotomic(Rational(coefficient(T)));
  }};
}

SeriesQ sigma_series(long w, long mmax) {
  SeriesQ s;
  s.n = 1;
  s.known = [mmax](const IntMatrix& T) { return T(0, 0) <= 2 * mmax; };
  s.coeff = [w, mmax](const IntMatrix& T) {
    Int m2 = T(0, 0);
    if (m2 > 2 * mmax) throw TruncationError("sigma series beyond its truncation");
    if (m2 <= 0) return Rational(0);
    return Rational(sigma(w, Int(m2 / 2).get_si()));
  };
  return s;
}

CoefficientOracle sigma_oracle(long w, long mmax) {
  return {[w, mmax](const LatticeKey& key) {
    if (key.n != 1) throw std::invalid_argument("sigma oracle has degree 1");
    IntMatrix T;
    if (!key_matrix_z(key, T)) return Cyclotomic(0);
    if (T(0, 0) > 2 * mmax) throw TruncationError("sigma oracle beyond its truncation");
    if (T(0, 0) <= 0) return Cyclotomic(0);
    return Cyclotomic(Rational(sigma(w, Int(T(0, 0) / 2).get_si())));
  }};
}

namespace {
Rational field_trace(const FieldElement& x, long d) { return d == 1 ? x.a : x.trace(); }
}  // namespace

CoefficientOracle TableOracle::oracle() const {
  auto self = std::make_shared<TableOracle>(*this);
  return {[self](const LatticeKey& key) {
    auto it = self->table.find(key);
    if (it != self->table.end()) return it->second;
    if (!key_is_even_integral(key)) return Cyclotomic(0);
    for (int i = 0; i < key.n; ++i)
      if (field_trace(key.at(i, i), key.d) > self->bound)
        throw TruncationError("key " + key.to_string() + " lies beyond the table bound");
    return Cyclotomic(0);
  }};
}

Cyclotomic parse_cyclotomic(const std::string& in) {
  std::string s;
  for (char ch : in)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  if (s.empty()) throw std::invalid_argument("empty exact value");
  // split into signed terms
  std::vector<std::string> terms;
  std::size_t st = 0;
  for (std::size_t i = 1; i <= s.size(); ++i)
    if (i == s.size() || ((s[i] == '+' || s[i] == '-') && s[i - 1] != '^')) {
      terms.push_back(s.substr(st, i - st));
      st = i;
    }
  unsigned long m = 1;
  std::vector<std::pair<long, Rational>> parts;
  for (std::string t : terms) {
    bool neg = false;
    if (t[0] == '+' || t[0] == '-') {
      neg = t[0] == '-';
      t = t.substr(1);
    }
    auto z = t.find("zeta");
    Rational coef = 1;
    long e = 0;
    if (z == std::string::npos) {
      coef = parse_rational(t);
    } else {
      if (z > 0) {
        if (t[z - 1] != '*') throw std::invalid_argument("bad term '" + t + "'");
        coef = parse_rational(t.substr(0, z - 1));
      }
      std::string rest = t.substr(z + 4);
      auto caret = rest.find('^');
      unsigned long mm = std::stoul(rest.substr(0, caret));
      e = caret == std::string::npos ? 1 : std::stol(rest.substr(caret + 1));
      if (m != 1 && mm != m) throw std::invalid_argument("mixed cyclotomic moduli");
      m = mm;
    }
    parts.push_back({e, neg ? Rational(-coef) : coef});
  }
  std::vector<Rational> c(m, Rational(0));
  for (const auto& [e, v] : parts) c[((e % static_cast<long>(m)) + m) % m] += v;
  return Cyclotomic::from_exponents(m, c);
}

TableOracle table_oracle_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("/: expected an object");
  if (!j.contains("entries") || !j["entries"].is_array()) throw std::invalid_argument("/entries: expected an array");
  if (!j.contains("bound")) throw std::invalid_argument("/bound: missing");
  TableOracle t;
  long d = j.value("field", 1L);
  t.K = std::make_shared<const QuadField>(d);
  t.bound = j["bound"].is_string() ? parse_rational(j["bound"].get<std::string>()) : Rational(j["bound"].get<long>());
  for (std::size_t i = 0; i < j["entries"].size(); ++i) {
    const auto& e = j["entries"][i];
    std::string where = "/entries/" + std::to_string(i);
    if (!e.is_object() || !e.contains("lattice") || !e.contains("value") || !e["value"].is_string())
      throw std::invalid_argument(where + ": expected {\"lattice\": ..., \"value\": \"...\"}");
    PseudoLattice L;
    try {
      nlohmann::json lj = e["lattice"];
      if (!lj.contains("field")) lj["field"] = d;
      L = lattice_from_json(lj);
    } catch (const std::invalid_argument& ex) {
      throw std::invalid_argument(where + "/lattice" + ex.what());
    }
    Cyclotomic v;
    try {
      v = parse_cyclotomic(e["value"].get<std::string>());
    } catch (const std::exception& ex) {
      throw std::invalid_argument(where + "/value: " + ex.what());
    }
    t.table[canonical_key(L)] = v;
  }
  return t;
}

}  // namespace hsm
