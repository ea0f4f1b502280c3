#include "hsm/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace hsm {

namespace {

using Vec = std::vector<FieldElement>;

std::vector<Rational> zc(const FieldElement& x, int dg) {
  if (dg == 1) return {x.a};
  return {x.a, x.b};
}

Vec column(const KMatrix& M, std::size_t j) {
  Vec v(M.rows());
  for (std::size_t i = 0; i < M.rows(); ++i) v[i] = M(i, j);
  return v;
}

Vec mat_vec(const KMatrix& M, const Vec& v) {
  Vec out(M.rows(), FieldElement(0));
  for (std::size_t i = 0; i < M.rows(); ++i)
    for (std::size_t j = 0; j < M.cols(); ++j) out[i] = out[i] + M(i, j) * v[j];
  return out;
}

FieldElement form(const KMatrix& A, const Vec& u, const Vec& v) {
  FieldElement s(0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i].is_zero()) continue;
    for (std::size_t j = 0; j < v.size(); ++j)
      if (!v[j].is_zero()) s = s + u[i] * A(i, j) * v[j];
  }
  return s;
}

// Q-coordinates of a vector of K^n as a column of length dg*n.
std::vector<Rational> zvec(const Vec& v, int dg) {
  std::vector<Rational> out;
  for (const auto& x : v)
    for (const auto& c : zc(x, dg)) out.push_back(c);
  return out;
}

Vec kvec(const QuadField& K, const RatMatrix& Z, std::size_t col) {
  int dg = K.degree();
  std::size_t n = Z.rows() / dg;
  Vec v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = dg == 1 ? K.elt(Z(i, col)) : K.elt(Z(2 * i, col), Z(2 * i + 1, col));
  return v;
}

RatMatrix columns_to_matrix(const std::vector<std::vector<Rational>>& cols, std::size_t rows) {
  RatMatrix M(rows, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < rows; ++i) M(i, j) = cols[j][i];
  return M;
}

// Z-basis of sum_j I_j x_j.
RatMatrix zbasis(const QuadField& K, const KMatrix& X, const std::vector<FracIdeal>& I) {
  int dg = K.degree();
  std::vector<std::vector<Rational>> cols;
  for (std::size_t j = 0; j < X.cols(); ++j)
    for (const auto& beta : I[j].basis()) {
      Vec v = column(X, j);
      for (auto& x : v) x = beta * x;
      cols.push_back(zvec(v, dg));
    }
  return columns_to_matrix(cols, dg * X.rows());
}

// Z-generators of the O-span of the given vectors.
RatMatrix zgens_of_ospan(const QuadField& K, const std::vector<Vec>& gens) {
  int dg = K.degree();
  std::vector<std::vector<Rational>> cols;
  for (const auto& g : gens) {
    cols.push_back(zvec(g, dg));
    if (dg == 2) {
      Vec w = g;
      for (auto& x : w) x = x * K.omega();
      cols.push_back(zvec(w, dg));
    }
  }
  return columns_to_matrix(cols, dg * gens.at(0).size());
}

// Square lower-triangular HNF basis of a full-rank Z-lattice given by generators.
RatMatrix zhnf(const RatMatrix& gens) {
  Int den = common_denominator(gens);
  auto h = hnf(scale_to_int(gens, den));
  if (h.rank != gens.rows()) throw std::invalid_argument("lattice is not of full rank");
  RatMatrix H = to_rational(h.H.block(0, 0, gens.rows(), gens.rows()));
  return H.scaled(make_rational(1, den));
}

RatMatrix concat(const RatMatrix& A, const RatMatrix& B) {
  RatMatrix M(A.rows(), A.cols() + B.cols());
  M.set_block(0, 0, A);
  M.set_block(0, A.cols(), B);
  return M;
}

RatMatrix zintersect(const RatMatrix& B1, const RatMatrix& B2) {
  RatMatrix M = concat(B1, -B2);
  IntMatrix Mi = scale_to_int(M, common_denominator(M));
  IntMatrix ker = int_kernel(Mi);
  RatMatrix X = to_rational(ker.block(0, 0, B1.cols(), ker.cols()));
  return zhnf(B1 * X);
}

// O-basis of an O-lattice from its lower-triangular Z-HNF (O a PID).
KMatrix obasis(const QuadField& K, const RatMatrix& H) {
  int dg = K.degree();
  std::size_t n = H.rows() / dg;
  KMatrix B(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    if (dg == 1) {
      for (std::size_t i = 0; i < n; ++i) B(i, j) = K.elt(H(i, j));
      continue;
    }
    std::size_t c0 = 2 * j, c1 = 2 * j + 1;
    FieldElement e0 = K.elt(H(c0, c0), H(c1, c0)), e1 = K.elt(0, H(c1, c1));
    FracIdeal a = K.from_zbasis({e0, e1});
    auto g = K.find_generator(a);
    if (!g) throw std::invalid_argument("non-principal coefficient ideal: class number one is required here");
    Rational x0 = g->a / H(c0, c0);
    Rational x1 = (g->b - x0 * H(c1, c0)) / H(c1, c1);
    if (!is_integer(x0) || !is_integer(x1)) throw std::logic_error("obasis: generator outside the projection");
    for (std::size_t i = 0; i < n; ++i) B(i, j) = K.elt(x0 * H(2 * i, c0) + x1 * H(2 * i, c1),
                                                        x0 * H(2 * i + 1, c0) + x1 * H(2 * i + 1, c1));
  }
  return B;
}

std::vector<FracIdeal> unit_ideals(const QuadField& K, int n) { return std::vector<FracIdeal>(n, K.unit_ideal()); }

// Row space basis (reduced echelon) over F_q.
std::vector<std::vector<int>> rref_rows(const Fq& F, std::vector<std::vector<int>> rows) {
  std::vector<std::vector<int>> out;
  if (rows.empty()) return out;
  std::size_t n = rows[0].size();
  std::size_t r = 0;
  for (std::size_t c = 0; c < n && r < rows.size(); ++c) {
    std::size_t piv = r;
    while (piv < rows.size() && rows[piv][c] == 0) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[r], rows[piv]);
    int inv = F.inv(rows[r][c]);
    for (auto& x : rows[r]) x = F.mul(x, inv);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][c] == 0) continue;
      int f = rows[i][c];
      for (std::size_t k = 0; k < n; ++k) rows[i][k] = F.sub(rows[i][k], F.mul(f, rows[r][k]));
    }
    ++r;
  }
  rows.resize(r);
  return rows;
}

std::vector<std::vector<std::size_t>> subsets(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (cur.size() == k) {
      out.push_back(cur);
      return;
    }
    for (std::size_t i = start; i < n; ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

KMatrix submatrix(const KMatrix& M, const std::vector<std::size_t>& R, const std::vector<std::size_t>& C) {
  KMatrix S(R.size(), C.size());
  for (std::size_t i = 0; i < R.size(); ++i)
    for (std::size_t j = 0; j < C.size(); ++j) S(i, j) = M(R[i], C[j]);
  return S;
}

int orientation_sign(const FieldElement& x) { return x.totally_positive() ? 1 : -1; }

}  // namespace

FieldElement det_k(const KMatrix& M) {
  if (!M.is_square()) throw std::invalid_argument("det of a non-square matrix");
  std::size_t n = M.rows();
  KMatrix A = M;
  FieldElement d(1);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && A(p, c).is_zero()) ++p;
    if (p == n) return FieldElement(0);
    if (p != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(A(p, k), A(c, k));
      d = -d;
    }
    d = d * A(c, c);
    for (std::size_t i = c + 1; i < n; ++i) {
      if (A(i, c).is_zero()) continue;
      FieldElement f = A(i, c) / A(c, c);
      for (std::size_t k = c; k < n; ++k) A(i, k) = A(i, k) - f * A(c, k);
    }
  }
  return d;
}

KMatrix inverse_k(const KMatrix& M) {
  std::size_t n = M.rows();
  KMatrix A = M, I = KMatrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && A(p, c).is_zero()) ++p;
    if (p == n) throw std::domain_error("singular matrix over K");
    for (std::size_t k = 0; k < n; ++k) {
      std::swap(A(p, k), A(c, k));
      std::swap(I(p, k), I(c, k));
    }
    FieldElement inv = FieldElement(1) / A(c, c);
    for (std::size_t k = 0; k < n; ++k) {
      A(c, k) = A(c, k) * inv;
      I(c, k) = I(c, k) * inv;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c || A(i, c).is_zero()) continue;
      FieldElement f = A(i, c);
      for (std::size_t k = 0; k < n; ++k) {
        A(i, k) = A(i, k) - f * A(c, k);
        I(i, k) = I(i, k) - f * I(c, k);
      }
    }
  }
  return I;
}

bool elt_less(const FieldElement& x, const FieldElement& y) {
  if (x.a != y.a) return x.a < y.a;
  return x.b < y.b;
}

KMatrix PseudoLattice::gram() const { return basis.transpose() * ambient * basis; }

PseudoLattice make_lattice(QuadFieldPtr K, const KMatrix& gram, const FracIdeal& J, std::vector<FracIdeal> ideals,
                           int orientation) {
  if (!gram.is_square() || !gram.is_symmetric()) throw std::invalid_argument("gram matrix must be square and symmetric");
  PseudoLattice L;
  L.n = static_cast<int>(gram.rows());
  if (ideals.empty()) ideals = unit_ideals(*K, L.n);
  if (static_cast<int>(ideals.size()) != L.n) throw std::invalid_argument("need one coefficient ideal per basis vector");
  L.K = std::move(K);
  L.ideals = std::move(ideals);
  L.basis = KMatrix::identity(L.n);
  L.ambient = gram;
  L.J = J;
  L.orientation = orientation >= 0 ? 1 : -1;
  return L;
}

PseudoLattice make_lattice_q(const std::vector<std::vector<long>>& gram, long scale) {
  auto K = std::make_shared<const QuadField>(1);
  KMatrix G(gram.size(), gram.size());
  for (std::size_t i = 0; i < gram.size(); ++i)
    for (std::size_t j = 0; j < gram.size(); ++j) G(i, j) = FieldElement(gram[i].at(j));
  return make_lattice(K, G, K->principal(K->elt(scale)));
}

PseudoLattice with_scaling(PseudoLattice L, const FracIdeal& J) {
  L.J = J;
  return L;
}

bool is_even_integral(const PseudoLattice& L) {
  const QuadField& K = *L.K;
  KMatrix T = L.gram();
  for (int i = 0; i < L.n; ++i)
    for (int j = i; j < L.n; ++j) {
      FracIdeal B = K.inv(K.mul(K.mul(L.ideals[i], L.ideals[j]), L.J));
      if (i == j) B = K.scale(B, K.elt(2));
      if (!K.contains(B, T(i, j))) return false;
    }
  return true;
}

bool is_positive_semidefinite(const PseudoLattice& L) {
  KMatrix T = L.gram();
  for (std::size_t k = 1; k <= static_cast<std::size_t>(L.n); ++k)
    for (const auto& S : subsets(L.n, k)) {
      FieldElement m = det_k(submatrix(T, S, S));
      if (m.sign(1) < 0 || m.sign(-1) < 0) return false;
    }
  return true;
}

bool is_nondegenerate(const PseudoLattice& L) { return !det_k(L.gram()).is_zero(); }

PseudoLattice free_presentation(const PseudoLattice& L) {
  const QuadField& K = *L.K;
  PseudoLattice F = L;
  F.basis = obasis(K, zhnf(zbasis(K, L.basis, L.ideals)));
  F.ideals = unit_ideals(K, L.n);
  return F;
}

InvariantFactors invariant_factors(const PseudoLattice& Lambda, const PseudoLattice& Omega) {
  if (Lambda.n != Omega.n) throw std::invalid_argument("invariant factors need lattices of equal rank");
  const QuadField& K = *Lambda.K;
  std::size_t n = Lambda.n;
  KMatrix M = inverse_k(Lambda.basis) * Omega.basis;
  std::vector<FracIdeal> D{K.unit_ideal()};
  for (std::size_t k = 1; k <= n; ++k) {
    std::optional<FracIdeal> Dk;
    for (const auto& R : subsets(n, k))
      for (const auto& C : subsets(n, k)) {
        FieldElement m = det_k(submatrix(M, R, C));
        if (m.is_zero()) continue;
        FracIdeal t = K.principal(m);
        for (auto j : C) t = K.mul(t, Omega.ideals[j]);
        for (auto i : R) t = K.mul(t, K.inv(Lambda.ideals[i]));
        Dk = Dk ? K.add(*Dk, t) : t;
      }
    if (!Dk) throw std::invalid_argument("lattices do not span the same space");
    D.push_back(*Dk);
  }
  InvariantFactors f;
  for (std::size_t k = 1; k <= n; ++k) f.A.push_back(K.mul(D[k], K.inv(D[k - 1])));
  if (K.is_rational()) {
    RatMatrix Mq(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        Rational gi = make_rational(Lambda.ideals[i].H(0, 0), Lambda.ideals[i].den);
        Rational gj = make_rational(Omega.ideals[j].H(0, 0), Omega.ideals[j].den);
        Mq(i, j) = M(i, j).a * gj / gi;
      }
    Int den = common_denominator(Mq);
    auto s = snf(scale_to_int(Mq, den));
    f.U = s.U;
    f.V = s.V;
  }
  return f;
}

int multiplicity(const InvariantFactors& f, const FracIdeal& A) {
  return static_cast<int>(std::count(f.A.begin(), f.A.end(), A));
}

std::size_t lattice_budget() {
  if (const char* s = std::getenv("HECKE_LATTICE_BUDGET")) {
    char* end = nullptr;
    long v = std::strtol(s, &end, 10);
    if (end != s && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return 20000;
}

std::vector<IntermediateLattice> enumerate_intermediate(const PseudoLattice& L, const PrimeIdeal& P, bool inside_lambda,
                                                        std::size_t budget) {
  if (P.p == 2) throw std::invalid_argument("dyadic primes are not supported");
  if (!is_nondegenerate(L)) throw std::invalid_argument("degenerate lattices are excluded from enumeration");
  const QuadField& K = *L.K;
  auto pi = K.find_generator(P.P);
  if (!pi) throw std::invalid_argument("non-principal prime: class number one is required here");
  PseudoLattice F = free_presentation(L);
  ResidueField R = K.residue_field(P);
  const Fq& Fq_ = *R.F;
  int n = L.n;
  FieldElement pinv = FieldElement(1) / *pi;

  std::vector<IntermediateLattice> out;
  auto emit = [&](const std::vector<Vec>& gens, int r0, int m1, int r2) {
    if (out.size() >= budget) throw BudgetExceeded("intermediate lattice enumeration exceeded the budget");
    std::vector<Vec> amb;
    for (const auto& g : gens) amb.push_back(mat_vec(F.basis, g));
    IntermediateLattice I;
    I.omega = F;
    I.omega.basis = obasis(K, zhnf(zgens_of_ospan(K, amb)));
    I.r0 = r0;
    I.m1 = m1;
    I.r2 = r2;
    out.push_back(std::move(I));
  };
  auto lift = [&](const std::vector<int>& v) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = K.lift(R, v[i]);
    return x;
  };

  for (int b = 0; b <= n; ++b) {
    for (const auto& S2 : enumerate_subspaces(Fq_, n, b)) {
      std::vector<int> comp;  // non-pivot coordinates span a complement of S2
      std::vector<bool> is_piv(n, false);
      for (const auto& row : S2)
        for (int c = 0; c < n; ++c)
          if (row[c]) {
            is_piv[c] = true;
            break;
          }
      for (int c = 0; c < n; ++c)
        if (!is_piv[c]) comp.push_back(c);
      int amax = inside_lambda ? 0 : b;
      for (int a = 0; a <= amax; ++a) {
        for (const auto& coef : enumerate_subspaces(Fq_, b, a)) {
          std::vector<std::vector<int>> S1;
          for (const auto& c : coef) {
            std::vector<int> v(n, 0);
            for (int i = 0; i < b; ++i)
              for (int k = 0; k < n; ++k) v[k] = Fq_.add(v[k], Fq_.mul(c[i], S2[i][k]));
            S1.push_back(v);
          }
          std::size_t nphi = a * comp.size();
          std::vector<int> phi(nphi, 0);
          for (;;) {
            std::vector<Vec> gens;
            for (int i = 0; i < n; ++i) {
              Vec e(n, FieldElement(0));
              e[i] = *pi;
              gens.push_back(e);
            }
            for (const auto& u : S2) gens.push_back(lift(u));
            for (int s = 0; s < a; ++s) {
              Vec g = lift(S1[s]);
              for (auto& x : g) x = x * pinv;
              for (std::size_t k = 0; k < comp.size(); ++k) g[comp[k]] = g[comp[k]] + K.lift(R, phi[s * comp.size() + k]);
              gens.push_back(g);
            }
            emit(gens, n - b, b - a, a);
            std::size_t k = 0;
            while (k < nphi && ++phi[k] == Fq_.q()) phi[k++] = 0;
            if (k == nphi) break;
          }
        }
      }
    }
  }
  return out;
}

QuadSpaceFq residue_space(const PseudoLattice& Lambda, const PseudoLattice& Omega, const PrimeIdeal& P,
                          const std::optional<FieldElement>& alpha_in) {
  if (P.p == 2) throw std::invalid_argument("dyadic primes are not supported");
  const QuadField& K = *Lambda.K;
  RatMatrix BL = zbasis(K, Lambda.basis, Lambda.ideals), BO = zbasis(K, Omega.basis, Omega.ideals);
  KMatrix W = obasis(K, zhnf(concat(BL, BO)));
  KMatrix Winv = inverse_k(W);
  RatMatrix Icap = zintersect(BL, BO);
  ResidueField R = K.residue_field(P);
  const Fq& F = *R.F;
  int n = Lambda.n;
  std::vector<std::vector<int>> rows;
  for (std::size_t c = 0; c < Icap.cols(); ++c) {
    Vec x = mat_vec(Winv, kvec(K, Icap, c));
    std::vector<int> r(n);
    for (int i = 0; i < n; ++i) r[i] = K.reduce(R, x[i]);
    rows.push_back(r);
  }
  auto basis = rref_rows(F, rows);
  FieldElement alpha = alpha_in ? *alpha_in : K.pick_with_orders({{P, K.ord(P, Lambda.J)}});
  if (K.ord(P, alpha) != K.ord(P, Lambda.J)) throw std::invalid_argument("alpha does not generate J locally at P");
  std::vector<Vec> us;
  for (const auto& b : basis) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = K.lift(R, b[i]);
    us.push_back(mat_vec(W, x));
  }
  QuadSpaceFq V;
  V.F = R.F;
  V.dim = static_cast<int>(us.size());
  V.gram.assign(V.dim * V.dim, 0);
  FieldElement half_alpha = alpha * K.elt(make_rational(1, 2));
  for (int i = 0; i < V.dim; ++i)
    for (int j = 0; j < V.dim; ++j) V.gram[i * V.dim + j] = K.reduce(R, half_alpha * form(Lambda.ambient, us[i], us[j]));
  return V;
}

// ---------------------------------------------------------------------------
// Canonical keys.

namespace {

// All nonzero x with x^t A x <= bound, one of each pair +-x (first nonzero entry positive).
std::vector<std::pair<Rational, std::vector<long>>> short_vectors(const RatMatrix& A, const Rational& bound,
                                                                  std::size_t budget) {
  std::size_t m = A.rows();
  std::vector<std::vector<Rational>> q(m, std::vector<Rational>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) q[i][j] = A(i, j);
  for (std::size_t i = 0; i < m; ++i) {
    if (q[i][i] <= 0) throw std::invalid_argument("form is not positive definite");
    for (std::size_t j = i + 1; j < m; ++j) {
      q[j][i] = q[i][j];
      q[i][j] = q[i][j] / q[i][i];
    }
    for (std::size_t k = i + 1; k < m; ++k)
      for (std::size_t l = k; l < m; ++l) q[k][l] -= q[k][i] * q[i][l];
  }
  std::vector<std::pair<Rational, std::vector<long>>> out;
  std::vector<long> x(m, 0);
  std::function<void(long, const Rational&)> rec = [&](long i, const Rational& rem) {
    if (i < 0) {
      bool nonzero = false, positive = false;
      for (long v : x)
        if (v != 0) {
          nonzero = true;
          positive = v > 0;
          break;
        }
      if (nonzero && positive) {
        if (out.size() >= budget) throw BudgetExceeded("short vector enumeration exceeded the budget");
        out.emplace_back(bound - rem, x);
      }
      return;
    }
    Rational c = 0;
    for (std::size_t j = i + 1; j < m; ++j) c -= q[i][j] * x[j];
    Rational r = rem / q[i][i];
    Int fl = floor_div(r.get_num(), r.get_den());
    Int s;
    mpz_sqrt(s.get_mpz_t(), fl.get_mpz_t());
    Int cf = floor_div(c.get_num(), c.get_den());
    Int lo_i = cf - s - 1, hi_i = cf + s + 1;
    long lo = lo_i.get_si(), hi = hi_i.get_si();
    for (long v = lo; v <= hi; ++v) {
      Rational t = Rational(v) - c;
      Rational used = q[i][i] * t * t;
      if (used > rem) continue;
      x[i] = v;
      rec(i - 1, rem - used);
    }
    x[i] = 0;
  };
  rec(static_cast<long>(m) - 1, bound);
  std::sort(out.begin(), out.end());
  return out;
}

bool entries_less(const std::vector<FieldElement>& x, const std::vector<FieldElement>& y) {
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end(), elt_less);
}

struct Canon {
  std::vector<Rational> profile;       // norms of the chosen basis, largest first
  std::vector<FieldElement> entries;   // upper triangle of the Gram matrix
  bool pos = false, neg = false;       // orientation signs of the changes attaining the minimum
  bool operator<(const Canon& o) const {
    if (profile != o.profile) return profile < o.profile;
    return entries_less(entries, o.entries);
  }
  bool same(const Canon& o) const { return profile == o.profile && entries == o.entries; }
};

// Minimum over O-bases of (norm profile, Gram entries) for a totally positive definite
// form G on O^n. The trace form bounds the search: every vector of the minimising basis
// has trace norm at most the largest diagonal trace norm of the input basis.
Canon canonical_definite(const QuadField& K, const KMatrix& G, std::size_t budget) {
  int dg = K.degree();
  std::size_t n = G.rows(), m = dg * n;
  std::vector<Vec> zb;
  for (std::size_t i = 0; i < n; ++i)
    for (int t = 0; t < dg; ++t) {
      Vec e(n, FieldElement(0));
      e[i] = t == 0 ? K.elt(1) : K.omega();
      zb.push_back(e);
    }
  auto tr = [&](const FieldElement& x) { return dg == 1 ? x.a : x.trace(); };
  RatMatrix A(m, m);
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t v = 0; v < m; ++v) A(u, v) = tr(form(G, zb[u], zb[v]));
  // The canonical basis only uses vectors up to its largest norm, which is at most the largest diagonal
  // entry of any basis. Start at the smallest entry and double until a basis turns up.
  Rational cap = 0, bound = A(0, 0);
  for (std::size_t i = 0; i < n; ++i) {
    cap = std::max(cap, A(dg * i, dg * i));
    bound = std::min(bound, A(dg * i, dg * i));
  }
  std::optional<Canon> best;
  for (;;) {
    bound = std::min(bound, cap);
    auto sv = short_vectors(A, bound, budget);
    std::vector<Vec> vecs;
    std::vector<Rational> norms;
    for (const auto& [nm, x] : sv) {
      Vec v(n, FieldElement(0));
      for (std::size_t u = 0; u < m; ++u)
        if (x[u]) v[u / dg] = v[u / dg] + zb[u][u / dg] * FieldElement(x[u]);
      vecs.push_back(v);
      norms.push_back(nm);
    }

    std::vector<std::size_t> chosen;
    std::size_t visited = 0;
    std::function<void()> rec = [&]() {
      if (++visited > 50 * budget) throw BudgetExceeded("canonical basis search exceeded the budget");
      std::size_t k = chosen.size();
      if (k == n) {
        KMatrix C(n, n);
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t i = 0; i < n; ++i) C(i, j) = vecs[chosen[j]][i];
        FieldElement D = det_k(C);
        Rational N = D.norm();
        if (N != 1 && N != -1) return;
        Canon c;
        for (std::size_t j = n; j-- > 0;) c.profile.push_back(norms[chosen[j]]);
        if (best && best->profile < c.profile) return;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
          Canon e = c;
          FieldElement sd = D;
          for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) sd = -sd;
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
              FieldElement g = form(G, vecs[chosen[i]], vecs[chosen[j]]);
              if (((mask >> i) ^ (mask >> j)) & 1) g = -g;
              e.entries.push_back(g);
            }
          (orientation_sign(sd) > 0 ? e.pos : e.neg) = true;
          if (!best || e < *best) {
            best = e;
          } else if (best->same(e)) {
            best->pos = best->pos || e.pos;
            best->neg = best->neg || e.neg;
          }
        }
        return;
      }
      for (std::size_t idx = 0; idx < vecs.size(); ++idx) {
        if (k > 0 && norms[idx] < norms[chosen[k - 1]]) continue;
        if (best && norms[idx] > best->profile[0]) break;
        if (std::find(chosen.begin(), chosen.end(), idx) != chosen.end()) continue;
        chosen.push_back(idx);
        KMatrix S(k + 1, k + 1);
        for (std::size_t i = 0; i <= k; ++i)
          for (std::size_t j = 0; j <= k; ++j) S(i, j) = form(G, vecs[chosen[i]], vecs[chosen[j]]);
        if (!det_k(S).is_zero()) rec();
        chosen.pop_back();
      }
    };
    rec();
    if (best || bound >= cap) break;
    bound *= 2;
  }
  if (!best) throw std::logic_error("canonical_definite: no basis found");
  return *best;
}

// Splits off the radical of an integral semi-definite form over Z: returns a unimodular
// change whose first columns span a complement and last columns the radical.
std::pair<IntMatrix, std::size_t> radical_split(const RatMatrix& T) {
  std::size_t n = T.rows();
  IntMatrix Ti = scale_to_int(T, common_denominator(T));
  IntMatrix Kc = int_kernel(Ti);
  std::size_t k = Kc.cols();
  if (k == 0) return {IntMatrix::identity(n), n};
  auto h = hnf(Kc.transpose());
  RatMatrix Vt = inverse(to_rational(h.U)).transpose();
  IntMatrix C(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n - k; ++j) C(i, j) = Vt(i, k + j).get_num();
    for (std::size_t j = 0; j < k; ++j) C(i, n - k + j) = Vt(i, j).get_num();
  }
  return {C, n - k};
}

}  // namespace

bool LatticeKey::operator==(const LatticeKey& o) const {
  return d == o.d && n == o.n && entries == o.entries && orient == o.orient;
}

bool LatticeKey::operator<(const LatticeKey& o) const {
  if (d != o.d) return d < o.d;
  if (n != o.n) return n < o.n;
  if (entries != o.entries) return entries_less(entries, o.entries);
  return orient < o.orient;
}

FieldElement LatticeKey::at(int i, int j) const {
  if (i > j) std::swap(i, j);
  int idx = i * n - i * (i - 1) / 2 + (j - i);
  return entries.at(idx);
}

std::string LatticeKey::to_string() const {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < n; ++i) {
    os << (i ? ", " : "") << "[";
    for (int j = 0; j < n; ++j) os << (j ? ", " : "") << at(i, j).to_string();
    os << "]";
  }
  os << "]";
  if (orient) os << (orient > 0 ? "+" : "-");
  return os.str();
}

RatMatrix canonical_form_z(const RatMatrix& T, std::size_t budget) {
  std::size_t n = T.rows();
  if (!T.is_symmetric()) throw std::invalid_argument("matrix must be symmetric");
  RatMatrix out(n, n);
  if (T.is_zero()) return out;
  auto [C, r] = radical_split(T);
  RatMatrix Cq = to_rational(C);
  RatMatrix S = Cq.transpose() * T * Cq;
  QuadField Q(1);
  KMatrix G(r, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) G(i, j) = FieldElement(S(i, j));
  if (r == 0) return out;
  Canon c = canonical_definite(Q, G, budget);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = i; j < r; ++j) out(i, j) = out(j, i) = c.entries[idx++].a;
  return out;
}

LatticeKey key_from_matrix_z(const RatMatrix& T, std::size_t budget) {
  RatMatrix C = canonical_form_z(T, budget);
  LatticeKey key;
  key.d = 1;
  key.n = static_cast<int>(T.rows());
  for (int i = 0; i < key.n; ++i)
    for (int j = i; j < key.n; ++j) key.entries.emplace_back(C(i, j));
  return key;
}

LatticeKey canonical_key(const PseudoLattice& L, bool oriented, std::size_t budget) {
  const QuadField& K = *L.K;
  PseudoLattice F = free_presentation(L);
  auto g = K.find_generator(L.J);
  if (!g) throw std::invalid_argument("non-principal scaling ideal: class number one is required here");
  std::vector<FieldElement> units{K.elt(1), K.elt(-1)};
  FieldElement eps = K.fundamental_unit();
  if (!K.is_rational()) {
    units.push_back(eps);
    units.push_back(-eps);
  }
  std::optional<FieldElement> a;
  for (const auto& u : units)
    if ((*g * u).totally_positive()) {
      a = *g * u;
      break;
    }
  if (!a) throw std::invalid_argument("scaling ideal has no totally positive generator");
  KMatrix G = F.gram();
  LatticeKey key;
  key.d = K.d();
  key.n = L.n;
  if (K.is_rational()) {
    RatMatrix T(L.n, L.n);
    for (int i = 0; i < L.n; ++i)
      for (int j = 0; j < L.n; ++j) T(i, j) = (*a * G(i, j)).a;
    if (det(T) == 0 || !oriented) {
      key = key_from_matrix_z(T, budget);
      return key;
    }
  } else if (det_k(G).is_zero()) {
    throw std::invalid_argument("degenerate lattices are keyed over Q only");
  }
  std::vector<FieldElement> scales{*a};
  if (!K.is_rational() && eps.totally_positive()) scales.push_back(*a * eps);
  std::optional<Canon> best;
  for (const auto& s : scales) {
    Canon c = canonical_definite(K, G.scaled(s), budget);
    if (!best || c < *best) {
      best = c;
    } else if (best->same(c)) {
      best->pos = best->pos || c.pos;
      best->neg = best->neg || c.neg;
    }
  }
  key.entries = best->entries;
  if (oriented && !(best->pos && best->neg)) key.orient = L.orientation * orientation_sign(det_k(F.basis)) * (best->pos ? 1 : -1);
  return key;
}

// ---------------------------------------------------------------------------
// JSON.

nlohmann::json ideal_to_json(const FracIdeal& A) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& b : A.basis()) j.push_back(b.to_string());
  return j;
}

FracIdeal ideal_from_json(const QuadField& K, const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("ideal must be a nonempty array of generators");
  std::vector<FieldElement> gens;
  for (const auto& g : j) {
    if (g.is_number_integer()) gens.push_back(K.elt(g.get<long>()));
    else if (g.is_string()) gens.push_back(parse_element(g.get<std::string>(), K.d()));
    else throw std::invalid_argument("ideal generators must be strings or integers");
  }
  return K.ideal(gens);
}

nlohmann::json to_json(const PseudoLattice& L) {
  nlohmann::json j;
  j["field"] = L.K->d();
  j["n"] = L.n;
  j["coeff_ideals"] = nlohmann::json::array();
  for (const auto& I : L.ideals) j["coeff_ideals"].push_back(ideal_to_json(I));
  KMatrix T = L.gram();
  j["gram"] = nlohmann::json::array();
  for (int r = 0; r < L.n; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < L.n; ++c) row.push_back(T(r, c).to_string());
    j["gram"].push_back(row);
  }
  j["scaling"] = ideal_to_json(L.J);
  j["orientation"] = L.orientation;
  return j;
}

PseudoLattice lattice_from_json(const nlohmann::json& j) {
  auto need = [&](const char* k) -> const nlohmann::json& {
    if (!j.is_object() || !j.contains(k)) throw std::invalid_argument(std::string("/") + k + ": missing");
    return j.at(k);
  };
  long d = 1;
  if (j.is_object() && j.contains("field")) {
    if (!j["field"].is_number_integer()) throw std::invalid_argument("/field: expected an integer");
    d = j["field"].get<long>();
  }
  auto K = std::make_shared<const QuadField>(d);
  const auto& g = need("gram");
  if (!g.is_array()) throw std::invalid_argument("/gram: expected an array of rows");
  std::size_t n = g.size();
  if (j.contains("n") && (!j["n"].is_number_integer() || j["n"].get<long>() != static_cast<long>(n)))
    throw std::invalid_argument("/n: does not match the gram matrix");
  KMatrix T(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    if (!g[r].is_array() || g[r].size() != n) throw std::invalid_argument("/gram/" + std::to_string(r) + ": bad row");
    for (std::size_t c = 0; c < n; ++c) {
      const auto& e = g[r][c];
      std::string where = "/gram/" + std::to_string(r) + "/" + std::to_string(c);
      try {
        if (e.is_number_integer()) T(r, c) = K->elt(e.get<long>());
        else if (e.is_string()) T(r, c) = parse_element(e.get<std::string>(), d);
        else throw std::invalid_argument("expected a string or integer");
      } catch (const std::invalid_argument& ex) {
        throw std::invalid_argument(where + ": " + ex.what());
      }
    }
  }
  if (!T.is_symmetric()) throw std::invalid_argument("/gram: not symmetric");
  std::vector<FracIdeal> ideals;
  if (j.contains("coeff_ideals")) {
    const auto& ci = j["coeff_ideals"];
    if (!ci.is_array() || ci.size() != n) throw std::invalid_argument("/coeff_ideals: need one ideal per basis vector");
    for (std::size_t i = 0; i < n; ++i) {
      try {
        ideals.push_back(ideal_from_json(*K, ci[i]));
      } catch (const std::invalid_argument& ex) {
        throw std::invalid_argument("/coeff_ideals/" + std::to_string(i) + ": " + ex.what());
      }
    }
  }
  FracIdeal J = K->unit_ideal();
  if (j.contains("scaling")) {
    try {
      J = ideal_from_json(*K, j["scaling"]);
    } catch (const std::invalid_argument& ex) {
      throw std::invalid_argument(std::string("/scaling: ") + ex.what());
    }
  }
  int orientation = 1;
  if (j.contains("orientation")) {
    if (!j["orientation"].is_number_integer() || std::abs(j["orientation"].get<long>()) != 1)
      throw std::invalid_argument("/orientation: expected 1 or -1");
    orientation = j["orientation"].get<int>();
  }
  return make_lattice(K, T, J, ideals, orientation);
}

}  // namespace hsm
