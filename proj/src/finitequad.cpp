#include "hsm/finitequad.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace hsm {

namespace {

std::vector<int> digits(int a, int p, int f) {
  std::vector<int> d(f);
  for (int i = 0; i < f; ++i, a /= p) d[i] = a % p;
  return d;
}

int undigits(const std::vector<int>& d, int p) {
  int a = 0;
  for (int i = static_cast<int>(d.size()) - 1; i >= 0; --i) a = a * p + d[i];
  return a;
}

bool is_prime(int p) {
  if (p < 2) return false;
  for (int d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

}  // namespace

Fq::Fq(int p, int f) : p_(p), f_(f), q_(1) {
  if (!is_prime(p) || p == 2) throw std::invalid_argument("Fq: characteristic must be an odd prime");
  if (f < 1) throw std::invalid_argument("Fq: degree must be positive");
  for (int i = 0; i < f; ++i) q_ *= p;
  if (q_ > 4096) throw std::invalid_argument("Fq: field too large for table arithmetic");
  // Lexicographically least monic modulus that yields a field.
  int count = q_;
  for (int code = 0; code < count; ++code) {
    std::vector<int> mod = digits(code, p, f);
    mod.push_back(1);
    if (f > 1 && mod[0] == 0) continue;
    build(mod);
    bool field = true;
    for (int a = 1; a < q_ && field; ++a) field = inv_[a] != 0;
    if (field) return;
  }
  throw std::logic_error("Fq: no irreducible modulus found");
}

Fq::Fq(int p, const std::vector<int>& modulus) : p_(p), f_(static_cast<int>(modulus.size()) - 1), q_(1) {
  if (!is_prime(p) || p == 2) throw std::invalid_argument("Fq: characteristic must be an odd prime");
  if (f_ < 1 || modulus.back() % p != 1) throw std::invalid_argument("Fq: modulus must be monic of degree >= 1");
  for (int i = 0; i < f_; ++i) q_ *= p;
  if (q_ > 4096) throw std::invalid_argument("Fq: field too large for table arithmetic");
  std::vector<int> mod(modulus);
  for (auto& c : mod) c = ((c % p) + p) % p;
  build(mod);
  for (int a = 1; a < q_; ++a)
    if (inv_[a] == 0) throw std::invalid_argument("Fq: modulus is reducible");
}

void Fq::build(const std::vector<int>& modulus) {
  modulus_ = modulus;
  int q = q_, p = p_, f = f_;
  add_.assign(q * q, 0);
  mul_.assign(q * q, 0);
  neg_.assign(q, 0);
  inv_.assign(q, 0);
  trace_.assign(q, 0);
  square_.assign(q, false);
  std::vector<std::vector<int>> dg(q);
  for (int a = 0; a < q; ++a) dg[a] = digits(a, p, f);
  for (int a = 0; a < q; ++a) {
    std::vector<int> n(f);
    for (int i = 0; i < f; ++i) n[i] = (p - dg[a][i]) % p;
    neg_[a] = undigits(n, p);
    for (int b = 0; b < q; ++b) {
      std::vector<int> s(f);
      for (int i = 0; i < f; ++i) s[i] = (dg[a][i] + dg[b][i]) % p;
      add_[a * q + b] = undigits(s, p);
      std::vector<int> prod(2 * f - 1, 0);
      for (int i = 0; i < f; ++i)
        for (int j = 0; j < f; ++j) prod[i + j] = (prod[i + j] + dg[a][i] * dg[b][j]) % p;
      for (int k = 2 * f - 2; k >= f; --k) {
        int c = prod[k];
        if (!c) continue;
        for (int s2 = 0; s2 <= f; ++s2) prod[k - f + s2] = ((prod[k - f + s2] - c * modulus_[s2]) % p + p) % p;
      }
      prod.resize(f);
      mul_[a * q + b] = undigits(prod, p);
    }
  }
  for (int a = 1; a < q; ++a)
    for (int b = 1; b < q; ++b)
      if (mul_[a * q + b] == 1) {
        inv_[a] = b;
        break;
      }
  for (int a = 0; a < q; ++a) square_[mul_[a * q + a]] = true;
  for (int a = 0; a < q; ++a) {
    int s = 0, x = a;
    for (int i = 0; i < f; ++i) {
      s = add_[s * q + x];
      int y = 1;
      for (int k = 0; k < p; ++k) y = mul_[y * q + x];
      x = y;
    }
    trace_[a] = s;  // lies in the prime field, encoded as its integer value
  }
}

int Fq::inv(int a) const {
  if (a == 0) throw std::domain_error("Fq: inverse of zero");
  return inv_[a];
}

int Fq::pow(int a, long long e) const {
  if (e < 0) {
    a = inv(a);
    e = -e;
  }
  int r = 1;
  while (e) {
    if (e & 1) r = mul(r, a);
    a = mul(a, a);
    e >>= 1;
  }
  return r;
}

int Fq::from_int(long long n) const { return static_cast<int>(((n % p_) + p_) % p_); }

FqPtr make_fq(int p, int f) { return std::make_shared<const Fq>(p, f); }

int QuadSpaceFq::value(const std::vector<int>& v) const { return bilinear(v, v); }

int QuadSpaceFq::bilinear(const std::vector<int>& u, const std::vector<int>& v) const {
  const Fq& K = *F;
  int s = 0;
  for (int i = 0; i < dim; ++i) {
    if (!u[i]) continue;
    int row = 0;
    for (int j = 0; j < dim; ++j)
      if (v[j]) row = K.add(row, K.mul(at(i, j), v[j]));
    s = K.add(s, K.mul(u[i], row));
  }
  return s;
}

QuadSpaceFq make_quadspace(FqPtr F, const std::vector<std::vector<long long>>& gram) {
  QuadSpaceFq V;
  V.dim = static_cast<int>(gram.size());
  V.gram.assign(V.dim * V.dim, 0);
  for (int i = 0; i < V.dim; ++i) {
    if (static_cast<int>(gram[i].size()) != V.dim) throw std::invalid_argument("gram must be square");
    for (int j = 0; j < V.dim; ++j) {
      long long x = gram[i][j];
      if (x < 0 || x >= F->q()) x = F->from_int(x);
      V.gram[i * V.dim + j] = static_cast<int>(x);
    }
  }
  for (int i = 0; i < V.dim; ++i)
    for (int j = 0; j < i; ++j)
      if (V.at(i, j) != V.at(j, i)) throw std::invalid_argument("gram must be symmetric");
  V.F = std::move(F);
  return V;
}

namespace {

// Congruence diagonalisation; returns the nonzero diagonal entries.
std::vector<int> diagonalize(const Fq& K, std::vector<int> g, int n) {
  std::vector<int> diag;
  auto G = [&](int i, int j) -> int& { return g[i * n + j]; };
  for (int k = 0; k < n; ++k) {
    int piv = -1;
    for (int i = k; i < n && piv < 0; ++i)
      if (G(i, i)) piv = i;
    if (piv < 0) {
      int pi = -1, pj = -1;
      for (int i = k; i < n && pi < 0; ++i)
        for (int j = i + 1; j < n; ++j)
          if (G(i, j)) {
            pi = i, pj = j;
            break;
          }
      if (pi < 0) break;
      // v_i += v_j makes the diagonal entry 2 G(i,j) != 0.
      for (int c = 0; c < n; ++c) G(pi, c) = K.add(G(pi, c), G(pj, c));
      for (int r = 0; r < n; ++r) G(r, pi) = K.add(G(r, pi), G(r, pj));
      piv = pi;
    }
    if (piv != k) {
      for (int c = 0; c < n; ++c) std::swap(G(piv, c), G(k, c));
      for (int r = 0; r < n; ++r) std::swap(G(r, piv), G(r, k));
    }
    int inv = K.inv(G(k, k));
    for (int j = k + 1; j < n; ++j) {
      if (!G(j, k)) continue;
      int f = K.mul(G(j, k), inv);
      for (int c = 0; c < n; ++c) G(j, c) = K.sub(G(j, c), K.mul(f, G(k, c)));
      for (int r = 0; r < n; ++r) G(r, j) = K.sub(G(r, j), K.mul(f, G(r, k)));
    }
    diag.push_back(G(k, k));
  }
  return diag;
}

WittData witt_from_diagonal(const Fq& K, const std::vector<int>& diag, int dim) {
  WittData wd;
  int s = static_cast<int>(diag.size());
  wd.r = dim - s;
  if (s % 2) {
    wd.w = 1;
    wd.t = (s - 1) / 2;
    return wd;
  }
  int disc = 1;
  for (int d : diag) disc = K.mul(disc, d);
  if ((s / 2) % 2) disc = K.neg(disc);
  if (s == 0 || K.is_square(disc)) {
    wd.t = s / 2;
  } else {
    wd.t = s / 2 - 1;
    wd.w = 2;
  }
  return wd;
}

// Row reduction over F_q; returns pivot columns and leaves rows reduced.
std::vector<int> rref_fq(const Fq& K, std::vector<std::vector<int>>& rows, int ncols) {
  std::vector<int> piv;
  std::size_t r = 0;
  for (int c = 0; c < ncols && r < rows.size(); ++c) {
    std::size_t s = r;
    while (s < rows.size() && rows[s][c] == 0) ++s;
    if (s == rows.size()) continue;
    std::swap(rows[r], rows[s]);
    int inv = K.inv(rows[r][c]);
    for (auto& x : rows[r]) x = K.mul(x, inv);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][c] == 0) continue;
      int f = rows[i][c];
      for (int j = 0; j < ncols; ++j) rows[i][j] = K.sub(rows[i][j], K.mul(f, rows[r][j]));
    }
    piv.push_back(c);
    ++r;
  }
  rows.resize(r);
  return piv;
}

std::vector<int> combine(const Fq& K, const std::vector<std::vector<int>>& basis, const std::vector<int>& coeffs,
                         int n) {
  std::vector<int> v(n, 0);
  for (std::size_t b = 0; b < basis.size(); ++b) {
    if (!coeffs[b]) continue;
    for (int i = 0; i < n; ++i) v[i] = K.add(v[i], K.mul(coeffs[b], basis[b][i]));
  }
  return v;
}

// Iterates all coefficient vectors in F_q^k; returns false when exhausted.
bool next_tuple(std::vector<int>& t, int q) {
  for (auto& x : t) {
    if (++x < q) return true;
    x = 0;
  }
  return false;
}

}  // namespace

WittData witt_data(const QuadSpaceFq& V) {
  return witt_from_diagonal(*V.F, diagonalize(*V.F, V.gram, V.dim), V.dim);
}

WittDecomposition witt_decompose(const QuadSpaceFq& V) {
  const Fq& K = *V.F;
  int n = V.dim;
  WittDecomposition out;
  // Radical = kernel of G.
  std::vector<std::vector<int>> g(n, std::vector<int>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g[i][j] = V.at(i, j);
  auto red = g;
  auto piv = rref_fq(K, red, n);
  std::vector<bool> is_piv(n, false);
  for (int c : piv) is_piv[c] = true;
  std::vector<std::vector<int>> rad;
  for (int fcol = 0; fcol < n; ++fcol) {
    if (is_piv[fcol]) continue;
    std::vector<int> v(n, 0);
    v[fcol] = 1;
    for (std::size_t r = 0; r < piv.size(); ++r) v[piv[r]] = K.neg(red[r][fcol]);
    rad.push_back(v);
  }
  // Complement of the radical by greedy extension with unit vectors.
  std::vector<std::vector<int>> span = rad, comp;
  for (int i = 0; i < n; ++i) {
    std::vector<int> e(n, 0);
    e[i] = 1;
    auto trial = span;
    trial.push_back(e);
    auto tr = trial;
    if (rref_fq(K, tr, n).size() == trial.size()) {
      span = trial;
      comp.push_back(e);
    }
  }
  out.basis = rad;
  out.data.r = static_cast<int>(rad.size());
  std::vector<std::vector<int>> pairs;
  while (comp.size() >= 2) {
    // A nondegenerate space of dimension >= 3 is isotropic, so a 3-dim window suffices.
    std::size_t k = std::min<std::size_t>(comp.size(), 3);
    std::vector<std::vector<int>> window(comp.begin(), comp.begin() + static_cast<long>(k));
    std::vector<int> t(k, 0), iso;
    while (next_tuple(t, K.q())) {
      auto v = combine(K, window, t, n);
      if (V.value(v) == 0) {
        iso = v;
        break;
      }
    }
    if (iso.empty()) break;
    std::vector<int> partner;
    for (const auto& s : comp) {
      int b = V.bilinear(iso, s);
      if (b) {
        partner = s;
        int inv = K.inv(b);
        for (auto& x : partner) x = K.mul(x, inv);
        break;
      }
    }
    if (partner.empty()) throw std::logic_error("witt_decompose: complement is degenerate");
    int c = K.mul(V.value(partner), K.half());
    for (int i = 0; i < n; ++i) partner[i] = K.sub(partner[i], K.mul(c, iso[i]));
    pairs.push_back(iso);
    pairs.push_back(partner);
    std::vector<std::vector<int>> rest;
    for (const auto& s : comp) {
      int bf = V.bilinear(s, partner), bv = V.bilinear(s, iso);
      std::vector<int> s2(n);
      for (int i = 0; i < n; ++i) s2[i] = K.sub(K.sub(s[i], K.mul(bf, iso[i])), K.mul(bv, partner[i]));
      rest.push_back(s2);
    }
    rref_fq(K, rest, n);
    comp = rest;
  }
  // What remains must be anisotropic; check every nonzero combination.
  std::vector<int> t(comp.size(), 0);
  while (next_tuple(t, K.q()))
    if (V.value(combine(K, comp, t, n)) == 0) throw std::logic_error("witt_decompose: kernel not anisotropic");
  out.data.t = static_cast<int>(pairs.size() / 2);
  out.data.w = static_cast<int>(comp.size());
  for (auto& v : pairs) out.basis.push_back(v);
  for (auto& v : comp) out.basis.push_back(v);
  return out;
}

Int beta(long m, long r, long q) {
  if (r < 0 || m < 0 || r > m) throw std::invalid_argument("beta: need 0 <= r <= m");
  Int num = 1, den = 1;
  for (long i = 0; i < r; ++i) {
    num *= ipow(q, static_cast<unsigned long>(m - i)) - 1;
    den *= ipow(q, static_cast<unsigned long>(r - i)) - 1;
  }
  if (num % den != 0) throw std::logic_error("beta: non-integral quotient");
  return num / den;
}

Int delta(long m, long r, long q) {
  if (r < 0) throw std::invalid_argument("delta: need r >= 0");
  Int v = 1;
  for (long i = 0; i < r; ++i) {
    long e = m - i;
    if (e < 0) throw std::invalid_argument("delta: negative exponent");
    v *= ipow(q, static_cast<unsigned long>(e)) + 1;
  }
  return v;
}

Int count_isotropic_closed(const WittData& wd, long l, long q) {
  long dim = wd.r + 2 * wd.t + wd.w;
  if (l < 0 || l > dim) throw std::invalid_argument("count_isotropic: l out of range");
  // Choose the image a-space in the regular part, then its preimage inside the radical.
  Int total = 0;
  for (long a = 0; a <= std::min<long>(l, wd.t); ++a) {
    long z = l - a;
    if (z > wd.r) continue;
    Int regular = beta(wd.t, a, q) * (a ? delta(wd.t + wd.w - 1, a, q) : Int(1));
    total += regular * beta(wd.r, z, q) * ipow(q, static_cast<unsigned long>(a * (wd.r - z)));
  }
  return total;
}

Int count_isotropic(const QuadSpaceFq& V, int l) { return count_isotropic_closed(witt_data(V), l, V.F->q()); }

std::vector<std::vector<std::vector<int>>> enumerate_subspaces(const Fq& K, int n, int m) {
  std::vector<std::vector<std::vector<int>>> out;
  if (m < 0 || m > n) return out;
  std::vector<int> pivots(m);
  for (int i = 0; i < m; ++i) pivots[i] = i;
  for (;;) {
    // Free positions: (row i, column c) with c > pivot_i and c not a pivot.
    std::vector<std::pair<int, int>> free_pos;
    for (int i = 0; i < m; ++i)
      for (int c = pivots[i] + 1; c < n; ++c)
        if (std::find(pivots.begin(), pivots.end(), c) == pivots.end()) free_pos.emplace_back(i, c);
    std::vector<int> t(free_pos.size(), 0);
    do {
      std::vector<std::vector<int>> b(m, std::vector<int>(n, 0));
      for (int i = 0; i < m; ++i) b[i][pivots[i]] = 1;
      for (std::size_t s = 0; s < free_pos.size(); ++s) b[free_pos[s].first][free_pos[s].second] = t[s];
      out.push_back(b);
    } while (next_tuple(t, K.q()));
    int i = m - 1;
    while (i >= 0 && pivots[i] == n - m + i) --i;
    if (i < 0) break;
    ++pivots[i];
    for (int j = i + 1; j < m; ++j) pivots[j] = pivots[j - 1] + 1;
  }
  return out;
}

Int count_isotropic_brute(const QuadSpaceFq& V, int l) {
  if (l < 0 || l > V.dim) throw std::invalid_argument("count_isotropic: l out of range");
  if (V.dim > 6) throw std::invalid_argument("count_isotropic_brute: dim > 6");
  long long count = 0;
  for (const auto& b : enumerate_subspaces(*V.F, V.dim, l)) {
    bool ti = true;
    for (int i = 0; i < l && ti; ++i)
      for (int j = i; j < l && ti; ++j) ti = V.bilinear(b[i], b[j]) == 0;
    if (ti) ++count;
  }
  return Int(static_cast<long>(count));
}

Int alpha_j(const QuadSpaceFq& V, int j, int n) {
  int l = V.dim - (n - j);
  if (l < 0) return 0;
  return count_isotropic(V, l);
}

namespace {

std::vector<int> sym_entry_weights(const Fq& K, const std::vector<int>& T, int r) {
  // tr(TW) = sum_i t_ii w_ii + sum_{i<j} 2 t_ij w_ij
  std::vector<int> c;
  int two = K.from_int(2);
  for (int i = 0; i < r; ++i)
    for (int j = i; j < r; ++j) c.push_back(i == j ? T[i * r + i] : K.mul(two, T[i * r + j]));
  return c;
}

}  // namespace

Cyclotomic complete_symmetric_charsum(const Fq& K, const std::vector<int>& T, int r, int e, int c) {
  if (e < 1 || e > 2) throw std::invalid_argument("charsum: modulus exponent must be 1 or 2");
  if (c == 0) throw std::invalid_argument("charsum: character must be nontrivial");
  Int v = 1;
  for (int w : sym_entry_weights(K, T, r)) v *= (K.mul(c, w) == 0) ? Int(K.q()) : Int(0);
  long N = r * (r + 1) / 2;
  v *= ipow(K.q(), static_cast<unsigned long>((e - 1) * N));
  return Cyclotomic(Rational(v));
}

Cyclotomic complete_symmetric_charsum_brute(const Fq& K, const std::vector<int>& T, int r, int e, int c) {
  if (e < 1 || e > 2) throw std::invalid_argument("charsum: modulus exponent must be 1 or 2");
  auto wts = sym_entry_weights(K, T, r);
  std::size_t N = wts.size();
  // W mod P^e as (W0, W1) with W = W0 + pi W1; psi only sees W0.
  std::vector<int> t(N * static_cast<std::size_t>(e), 0);
  CycloAccumulator acc(static_cast<unsigned long>(K.p()));
  do {
    int s = 0;
    for (std::size_t i = 0; i < N; ++i) s = K.add(s, K.mul(wts[i], t[i]));
    acc.add(K.trace(K.mul(c, s)));
  } while (next_tuple(t, K.q()));
  return acc.value();
}

namespace {

int sym_rank(const Fq& K, const std::vector<int>& w, int r) {
  std::vector<std::vector<int>> rows(r, std::vector<int>(r));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) rows[i][j] = w[i * r + j];
  return static_cast<int>(rref_fq(K, rows, r).size());
}

std::vector<int> decode_sym(long long code, int r, int q) {
  std::vector<int> w(r * r);
  for (int i = 0; i < r; ++i)
    for (int j = i; j < r; ++j) {
      w[i * r + j] = w[j * r + i] = static_cast<int>(code % q);
      code /= q;
    }
  return w;
}

long long encode_sym(const std::vector<int>& w, int r, int q) {
  long long code = 0, mult = 1;
  for (int i = 0; i < r; ++i)
    for (int j = i; j < r; ++j) {
      code += w[i * r + j] * mult;
      mult *= q;
    }
  return code;
}

}  // namespace

StratifyReport rank_stratify(const Fq& K, int r1) {
  StratifyReport rep;
  rep.r1 = r1;
  rep.q = K.q();
  int q = K.q();
  int N = r1 * (r1 + 1) / 2;
  long long total = 1;
  for (int i = 0; i < N; ++i) total *= q;
  if (total > 1000000) throw std::invalid_argument("rank_stratify: budget exceeded");

  std::vector<int> rank_of(total);
  rep.stratum_matrices.assign(r1 + 1, 0);
  for (long long c = 0; c < total; ++c) {
    rank_of[c] = sym_rank(K, decode_sym(c, r1, q), r1);
    ++rep.stratum_matrices[rank_of[c]];
  }

  std::vector<int> hits(total, 0);
  std::vector<long long> image;  // phi values, in pair order
  rep.stratum_pairs.assign(r1 + 1, 0);
  bool bij = true;
  for (int m = 0; m <= r1; ++m) {
    int Nm = m * (m + 1) / 2;
    long long um = 1;
    for (int i = 0; i < Nm; ++i) um *= q;
    std::vector<std::vector<int>> units;
    for (long long c = 0; c < um; ++c) {
      auto U = decode_sym(c, m, q);
      if (sym_rank(K, U, m) == m) units.push_back(U);
    }
    for (const auto& R : enumerate_subspaces(K, r1, m)) {
      for (const auto& U : units) {
        // phi = R^t U R
        std::vector<int> w(r1 * r1, 0);
        for (int a = 0; a < r1; ++a)
          for (int b = 0; b < r1; ++b) {
            int s = 0;
            for (int i = 0; i < m; ++i) {
              if (!R[i][a]) continue;
              for (int j = 0; j < m; ++j) s = K.add(s, K.mul(R[i][a], K.mul(U[i * m + j], R[j][b])));
            }
            w[a * r1 + b] = s;
          }
        long long code = encode_sym(w, r1, q);
        if (rank_of[code] != m) bij = false;
        ++hits[code];
        image.push_back(code);
        ++rep.stratum_pairs[m];
      }
    }
    if (rep.stratum_pairs[m] != rep.stratum_matrices[m]) bij = false;
  }
  bool part = true;
  for (long long c = 0; c < total; ++c)
    if (hits[c] != 1) part = false;
  rep.bijective = bij && part;
  rep.partition = part;

  // Both sides of the character sum identity, for every T1.
  std::vector<std::vector<int>> entries(total);
  for (long long c = 0; c < total; ++c) {
    auto w = decode_sym(c, r1, q);
    for (int i = 0; i < r1; ++i)
      for (int j = i; j < r1; ++j) entries[c].push_back(w[i * r1 + j]);
  }
  bool eq = true;
  for (long long tc = 0; tc < total; ++tc) {
    auto wts = sym_entry_weights(K, decode_sym(tc, r1, q), r1);
    auto psi_exp = [&](long long wc) {
      int s = 0;
      const auto& e = entries[wc];
      for (int i = 0; i < N; ++i) s = K.add(s, K.mul(wts[i], e[i]));
      return K.trace(s);
    };
    std::vector<long long> lh(K.p(), 0), rh(K.p(), 0);
    for (long long wc = 0; wc < total; ++wc) ++lh[psi_exp(wc)];
    for (long long wc : image) ++rh[psi_exp(wc)];
    CycloAccumulator lhs(static_cast<unsigned long>(K.p())), rhs(static_cast<unsigned long>(K.p()));
    for (int e = 0; e < K.p(); ++e) {
      lhs.add(e, Rational(static_cast<long>(lh[e])));
      rhs.add(e, Rational(static_cast<long>(rh[e])));
    }
    if (lhs.value() != rhs.value()) eq = false;
    ++rep.charsum_checked;
  }
  rep.charsums_equal = eq;
  return rep;
}

IsotropicGridReport isotropic_grid(const Fq& K, int dim) {
  IsotropicGridReport rep;
  rep.q = K.q();
  rep.dim = dim;
  int q = K.q();
  if (dim == 0) {
    rep.matrices = 1;
    return rep;
  }
  // Projective points: nonzero vectors whose first nonzero coordinate is 1.
  std::vector<std::vector<int>> pts;
  std::map<std::vector<int>, int> pt_index;
  {
    std::vector<int> v(dim, 0);
    while (next_tuple(v, q)) {
      int lead = 0;
      while (!v[lead]) ++lead;
      if (v[lead] != 1) continue;
      pt_index[v] = static_cast<int>(pts.size());
      pts.push_back(v);
    }
  }
  int P = static_cast<int>(pts.size());
  auto normalize = [&](std::vector<int> v) {
    int lead = 0;
    while (!v[lead]) ++lead;
    int inv = K.inv(v[lead]);
    for (auto& x : v) x = K.mul(x, inv);
    return pt_index.at(v);
  };
  // Subspaces of dimension >= 2 as point sets, grouped by their least point so a
  // subspace is examined only when that point is isotropic.
  struct Sub {
    int l;
    std::vector<int> rest;
  };
  std::vector<std::vector<Sub>> by_min(P);
  for (int l = 2; l <= dim; ++l) {
    for (const auto& b : enumerate_subspaces(K, dim, l)) {
      std::vector<int> ids;
      std::vector<int> t(l, 0);
      while (next_tuple(t, q)) {
        int lead = 0;
        while (!t[lead]) ++lead;
        if (t[lead] != 1) continue;
        ids.push_back(normalize(combine(K, b, t, dim)));
      }
      std::sort(ids.begin(), ids.end());
      by_min[ids[0]].push_back({l, std::vector<int>(ids.begin() + 1, ids.end())});
    }
  }
  // Entry (i,j), i <= j, contributes g * coef to Q(v).
  std::vector<std::pair<int, int>> ents;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) ents.emplace_back(i, j);
  int N = static_cast<int>(ents.size());
  std::vector<std::vector<int>> coef(N, std::vector<int>(P));
  for (int e = 0; e < N; ++e)
    for (int k = 0; k < P; ++k) {
      auto [i, j] = ents[e];
      int x = K.mul(pts[k][i], pts[k][j]);
      coef[e][k] = i == j ? x : K.add(x, x);
    }
  std::map<std::pair<int, std::pair<int, int>>, std::vector<long long>> closed_cache;
  auto closed_counts = [&](const WittData& wd) -> const std::vector<long long>& {
    auto key = std::make_pair(wd.r, std::make_pair(wd.t, wd.w));
    auto it = closed_cache.find(key);
    if (it != closed_cache.end()) return it->second;
    std::vector<long long> c(dim + 1);
    for (int l = 0; l <= dim; ++l) c[l] = count_isotropic_closed(wd, l, q).get_si();
    return closed_cache.emplace(key, c).first->second;
  };

  std::vector<std::vector<int>> partial(N + 1, std::vector<int>(P, 0));
  std::vector<int> g(N, 0), gram(dim * dim);
  std::vector<char> iso(P);
  std::vector<long long> brute(dim + 1);
  // Odometer over all entries, refreshing partial sums from the changed depth on.
  int changed = 0;
  for (;;) {
    for (int d = changed; d < N; ++d) {
      const auto& src = partial[d];
      auto& dst = partial[d + 1];
      const auto& cf = coef[d];
      int gd = g[d];
      for (int k = 0; k < P; ++k) dst[k] = K.add(src[k], K.mul(gd, cf[k]));
    }
    const auto& qv = partial[N];
    std::fill(brute.begin(), brute.end(), 0);
    brute[0] = 1;
    for (int k = 0; k < P; ++k) {
      iso[k] = qv[k] == 0;
      brute[1] += iso[k];
    }
    for (int k = 0; k < P; ++k) {
      if (!iso[k]) continue;
      for (const auto& s : by_min[k]) {
        bool ok = true;
        for (int id : s.rest)
          if (!iso[id]) {
            ok = false;
            break;
          }
        if (ok) ++brute[s.l];
      }
    }
    for (int e = 0; e < N; ++e) {
      auto [i, j] = ents[e];
      gram[i * dim + j] = gram[j * dim + i] = g[e];
    }
    const auto& cc = closed_counts(witt_from_diagonal(K, diagonalize(K, gram, dim), dim));
    if (cc != brute) ++rep.mismatches;
    ++rep.matrices;

    int d = N - 1;
    while (d >= 0 && g[d] == q - 1) g[d--] = 0;
    if (d < 0) break;
    ++g[d];
    changed = d;
  }
  return rep;
}

}  // namespace hsm
