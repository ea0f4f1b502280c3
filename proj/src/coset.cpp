#include "hsm/coset.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace hsm {

namespace {

KMatrix kzero(std::size_t r, std::size_t c, long d) { return KMatrix(r, c, FieldElement(0, 0, d)); }

KMatrix kidentity(std::size_t n, long d) {
  KMatrix M = kzero(n, n, d);
  for (std::size_t i = 0; i < n; ++i) M(i, i) = FieldElement(1, 0, d);
  return M;
}

KMatrix block2(const KMatrix& A, const KMatrix& B, const KMatrix& C, const KMatrix& D) {
  std::size_t n = A.rows();
  KMatrix M(2 * n, 2 * n);
  M.set_block(0, 0, A);
  M.set_block(0, n, B);
  M.set_block(n, 0, C);
  M.set_block(n, n, D);
  return M;
}

IntMatrix iblock2(const IntMatrix& A, const IntMatrix& B, const IntMatrix& C, const IntMatrix& D) {
  std::size_t n = A.rows();
  IntMatrix M(2 * n, 2 * n);
  M.set_block(0, 0, A);
  M.set_block(0, n, B);
  M.set_block(n, 0, C);
  M.set_block(n, n, D);
  return M;
}

// Inverse of a symplectic matrix: (tD -tB; -tC tA).
IntMatrix symp_inverse(const IntMatrix& g) {
  std::size_t n = g.rows() / 2;
  IntMatrix A = g.block(0, 0, n, n), B = g.block(0, n, n, n), C = g.block(n, 0, n, n), D = g.block(n, n, n, n);
  return iblock2(D.transpose(), -B.transpose(), -C.transpose(), A.transpose());
}

IntMatrix to_int(const RatMatrix& M) {
  IntMatrix R(M.rows(), M.cols());
  for (std::size_t i = 0; i < M.rows(); ++i)
    for (std::size_t j = 0; j < M.cols(); ++j) {
      if (!is_integer(M(i, j))) throw std::logic_error("expected an integral matrix");
      R(i, j) = M(i, j).get_num();
    }
  return R;
}

IntMatrix adjugate_t(const IntMatrix& M) {
  // transpose of the adjugate: cofactor matrix
  std::size_t n = M.rows();
  IntMatrix R(n, n);
  if (n == 1) {
    R(0, 0) = 1;
    return R;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      IntMatrix m(n - 1, n - 1);
      for (std::size_t a = 0, ra = 0; a < n; ++a) {
        if (a == i) continue;
        for (std::size_t b = 0, cb = 0; b < n; ++b) {
          if (b == j) continue;
          m(ra, cb++) = M(a, b);
        }
        ++ra;
      }
      Int c = det(m);
      R(i, j) = ((i + j) % 2) ? Int(-c) : c;
    }
  return R;
}

Int smallest_prime_factor(Int x) {
  if (x < 0) x = -x;
  for (Int q = 2; q * q <= x; ++q)
    if (x % q == 0) return q;
  return x;
}

std::vector<Int> prime_factors(Int x) {
  if (x < 0) x = -x;
  std::vector<Int> out;
  for (Int q = 2; q * q <= x; ++q)
    if (x % q == 0) {
      out.push_back(q);
      while (x % q == 0) x /= q;
    }
  if (x > 1) out.push_back(x);
  return out;
}

// Symmetric n x n matrices with entries in [0, m), in a fixed order.
std::vector<IntMatrix> symmetric_mod(int n, long m) {
  std::vector<std::pair<int, int>> slots;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) slots.push_back({i, j});
  std::vector<IntMatrix> out;
  std::vector<long> c(slots.size(), 0);
  while (true) {
    IntMatrix Y(n, n);
    for (std::size_t s = 0; s < slots.size(); ++s) {
      Y(slots[s].first, slots[s].second) = c[s];
      Y(slots[s].second, slots[s].first) = c[s];
    }
    out.push_back(Y);
    std::size_t s = 0;
    while (s < c.size() && ++c[s] == m) c[s++] = 0;
    if (s == c.size()) break;
  }
  return out;
}

Int ipow_l(long p, long e) { return ipow(Int(p), static_cast<unsigned long>(e)); }

Rational rpow(const Rational& x, long e) {
  Rational r = 1;
  Rational b = e >= 0 ? x : Rational(1) / x;
  for (long i = 0; i < (e >= 0 ? e : -e); ++i) r *= b;
  return r;
}

RatMatrix diag_rat(const std::vector<Rational>& d) {
  RatMatrix M(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) M(i, i) = d[i];
  return M;
}

}  // namespace

GroupData standard_group(QuadFieldPtr K, int n) {
  GroupData G;
  G.n = n;
  G.I.assign(n, K->unit_ideal());
  G.J = K->unit_ideal();
  G.K = std::move(K);
  return G;
}

KMatrix to_kmatrix(const RatMatrix& M, long d) {
  KMatrix R(M.rows(), M.cols());
  for (std::size_t i = 0; i < M.rows(); ++i)
    for (std::size_t j = 0; j < M.cols(); ++j) R(i, j) = FieldElement(M(i, j), 0, d);
  return R;
}

bool is_member(const KMatrix& M, const GroupData& G) {
  const QuadField& K = *G.K;
  std::size_t n = G.n;
  if (M.rows() != 2 * n || M.cols() != 2 * n) return false;
  KMatrix A = M.block(0, 0, n, n), B = M.block(0, n, n, n), C = M.block(n, 0, n, n), D = M.block(n, n, n, n);
  if (!(A * B.transpose()).is_symmetric() || !(C * D.transpose()).is_symmetric()) return false;
  KMatrix U = A * D.transpose() - B * C.transpose();
  FieldElement u = U(0, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (U(i, j) != (i == j ? u : FieldElement(0, 0, K.d()))) return false;
  if (!u.is_integral() || u.norm() != 1 || !u.totally_positive()) return false;
  FracIdeal Dinv = K.inv(K.different());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      FracIdeal IiIj = K.mul(G.I[i], G.I[j]);
      FracIdeal a = K.mul(G.I[i], K.inv(G.I[j]));
      FracIdeal b = K.mul(K.mul(IiIj, G.J), Dinv);
      FracIdeal c = K.mul(K.inv(K.mul(IiIj, G.J)), K.different());
      FracIdeal d = K.mul(K.inv(G.I[i]), G.I[j]);
      if (!K.contains(a, A(i, j)) || !K.contains(b, B(i, j)) || !K.contains(c, C(i, j)) ||
          !K.contains(d, D(i, j)))
        return false;
    }
  return true;
}

bool is_member_z(const RatMatrix& M) {
  std::size_t n = M.rows() / 2;
  if (M.rows() != 2 * n || M.cols() != 2 * n) return false;
  for (const auto& x : M.data())
    if (!is_integer(x)) return false;
  RatMatrix Jm(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    Jm(i, n + i) = 1;
    Jm(n + i, i) = -1;
  }
  return M * Jm * M.transpose() == Jm;
}

OperatorMatrix operator_U(const GroupData& G, int l, const FieldElement& alpha) {
  if (l < 1 || l > G.n || alpha.is_zero()) throw std::invalid_argument("U_l(alpha): bad index or alpha");
  long d = G.K->d();
  KMatrix M = kidentity(2 * G.n, d);
  M(l - 1, l - 1) = FieldElement(1, 0, d) / alpha;
  M(G.n + l - 1, G.n + l - 1) = alpha;
  GroupData T = G;
  T.I[l - 1] = G.K->scale(G.I[l - 1], alpha);
  return {M, G, T};
}

OperatorMatrix operator_W(const GroupData& G, const FieldElement& alpha) {
  if (!alpha.totally_positive()) throw std::invalid_argument("W(alpha) needs alpha totally positive");
  long d = G.K->d();
  KMatrix M = kidentity(2 * G.n, d);
  for (int i = 0; i < G.n; ++i) M(i, i) = FieldElement(1, 0, d) / alpha;
  GroupData T = G;
  T.J = G.K->scale(G.J, alpha);
  return {M, G, T};
}

KMatrix det_one_completion(const QuadField& K, const FracIdeal& X, const FracIdeal& Z1, const FracIdeal& Z2,
                           const FracIdeal& Y, std::size_t budget) {
  FracIdeal O = K.unit_ideal();
  if (K.mul(X, Y) != O || K.mul(Z1, Z2) != O) throw std::invalid_argument("det-one completion: ideals not inverse");
  auto xb = X.basis(), zb = Z1.basis(), yb = Y.basis(), z2b = Z2.basis();
  int deg = K.degree();
  auto combos = [&](const std::vector<FieldElement>& basis, long R) {
    std::vector<FieldElement> out;
    if (basis.size() == 1) {
      for (long c = -R; c <= R; ++c) out.push_back(basis[0] * FieldElement(c, 0, K.d()));
    } else {
      for (long c0 = -R; c0 <= R; ++c0)
        for (long c1 = -R; c1 <= R; ++c1)
          out.push_back(basis[0] * FieldElement(c0, 0, K.d()) + basis[1] * FieldElement(c1, 0, K.d()));
    }
    return out;
  };
  std::size_t tries = 0;
  for (long R = 1;; ++R) {
    for (const auto& a : combos(xb, R))
      for (const auto& b : combos(zb, R)) {
        if (++tries > budget) throw BudgetExceeded("det-one completion search exceeded the budget");
        if (a.is_zero() && b.is_zero()) continue;
        std::vector<FieldElement> gens;
        if (!a.is_zero())
          for (const auto& y : yb) gens.push_back(a * y);
        if (!b.is_zero())
          for (const auto& z : z2b) gens.push_back(b * z);
        // a y + b z = 1 over Z-coordinates (1, w)
        IntMatrix M(deg, gens.size());
        for (std::size_t c = 0; c < gens.size(); ++c) {
          if (!gens[c].is_integral()) throw std::logic_error("det-one completion: non-integral product");
          M(0, c) = gens[c].a.get_num();
          if (deg == 2) M(1, c) = gens[c].b.get_num();
        }
        auto h = hnf(M);
        if (h.rank != static_cast<std::size_t>(deg)) continue;
        // H = M U lower triangular; solve H y = e_1
        std::vector<Int> y(deg, 0);
        if (h.H(0, 0) != 1 && h.H(0, 0) != -1) continue;
        y[0] = h.H(0, 0);
        if (deg == 2) {
          Int num = -h.H(1, 0) * y[0];
          if (num % h.H(1, 1) != 0) continue;
          y[1] = num / h.H(1, 1);
        }
        FieldElement d(0, 0, K.d()), c(0, 0, K.d());
        std::size_t na = a.is_zero() ? 0 : yb.size();
        for (std::size_t g = 0; g < gens.size(); ++g) {
          Int xg = 0;
          for (std::size_t cc = 0; cc < h.rank; ++cc) xg += h.U(g, cc) * y[cc];
          FieldElement coef(Rational(xg), 0, K.d());
          if (g < na) d = d + coef * yb[g];
          else c = c - coef * z2b[g - na];
        }
        KMatrix R(2, 2);
        R(0, 0) = a;
        R(0, 1) = b;
        R(1, 0) = c;
        R(1, 1) = d;
        if (a * d - b * c != FieldElement(1, 0, K.d())) throw std::logic_error("det-one completion: check failed");
        return R;
      }
  }
}

OperatorMatrix operator_V(const GroupData& G, int l, const FracIdeal& Q, std::size_t budget) {
  const QuadField& K = *G.K;
  if (l < 1 || l >= G.n) throw std::invalid_argument("V_l(Q) needs 1 <= l < n");
  const FracIdeal &Il = G.I[l - 1], &Il1 = G.I[l];
  FracIdeal Qi = K.inv(Q);
  KMatrix A2 = det_one_completion(K, Qi, K.mul(K.mul(Q, Il), K.inv(Il1)), K.mul(K.mul(Qi, K.inv(Il)), Il1), Q,
                                  budget);
  long d = K.d();
  KMatrix Mn = kidentity(G.n, d);
  Mn.set_block(l - 1, l - 1, A2);
  KMatrix M = block2(Mn, kzero(G.n, G.n, d), kzero(G.n, G.n, d), inverse_k(Mn).transpose());
  GroupData T = G;
  T.I[l - 1] = K.mul(Q, Il);
  T.I[l] = K.mul(Qi, Il1);
  return {M, G, T};
}

OperatorMatrix operator_S(const GroupData& G, int l, const FracIdeal& Q, std::size_t budget) {
  const QuadField& K = *G.K;
  if (l < 1 || l > G.n) throw std::invalid_argument("S_l(Q) needs 1 <= l <= n");
  const FracIdeal& Il = G.I[l - 1];
  FracIdeal Qi = K.inv(Q);
  FracIdeal Il2 = K.mul(Il, Il);
  FracIdeal b = K.mul(K.mul(K.mul(Qi, Il2), G.J), K.inv(K.different()));
  FracIdeal c = K.mul(K.mul(K.mul(Q, K.inv(Il2)), K.inv(G.J)), K.different());
  KMatrix abcd = det_one_completion(K, Q, b, c, Qi, budget);
  long d = K.d();
  KMatrix M = kidentity(2 * G.n, d);
  std::size_t i = l - 1, n = G.n;
  M(i, i) = abcd(0, 0);
  M(i, n + i) = abcd(0, 1);
  M(n + i, i) = abcd(1, 0);
  M(n + i, n + i) = abcd(1, 1);
  GroupData T = G;
  T.I[i] = K.mul(Qi, Il);
  return {M, G, T};
}

Completion complete_coprime_pair(const IntMatrix& C, const IntMatrix& D, std::size_t budget) {
  std::size_t n = C.rows();
  if (C.cols() != n || D.rows() != n || D.cols() != n) throw std::invalid_argument("coprime pair: shape mismatch");
  if (!(C * D.transpose()).is_symmetric()) throw std::invalid_argument("coprime pair: C tD is not symmetric");
  IntMatrix CD(n, 2 * n);
  CD.set_block(0, 0, C);
  CD.set_block(0, n, D);
  auto s = snf(CD);
  for (std::size_t i = 0; i < n; ++i) {
    Int e = s.D(i, i);
    if (e != 1 && e != -1) {
      std::ostringstream os;
      if (e == 0) os << "coprime pair: rank of (C|D) is below n";
      else os << "coprime pair: rank deficiency at the prime " << smallest_prime_factor(e);
      throw std::invalid_argument(os.str());
    }
  }
  IntMatrix I = IntMatrix::identity(n), Z(n, n);
  IntMatrix M = IntMatrix::identity(2 * n);
  IntMatrix Cc = C, Dc = D;
  std::size_t tries = 0;
  auto spend = [&]() {
    if (++tries > budget) throw BudgetExceeded("coprime pair completion exceeded the budget");
  };
  if (det(Dc) == 0) {
    // (C | D)(I Y; 0 I) = (C | C Y + D)
    bool found = false;
    for (long R = 1; !found; ++R)
      for (const auto& Y0 : symmetric_mod(n, 2 * R + 1)) {
        spend();
        IntMatrix Y = Y0;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) Y(i, j) -= R;
        IntMatrix Dn = Cc * Y + Dc;
        if (det(Dn) != 0) {
          M = M * iblock2(I, Y, Z, I);
          Dc = Dn;
          found = true;
          break;
        }
      }
  }
  Int kappa = det(Dc);
  // (C | D)(I 0; W I) = (C + D W | D); W fixed prime by prime, then glued by CRT.
  IntMatrix W(n, n);
  auto primes = prime_factors(kappa);
  if (primes.empty()) {
    bool found = false;
    for (long R = 0; !found; ++R)
      for (const auto& W0 : symmetric_mod(n, 2 * R + 1)) {
        spend();
        IntMatrix Wc = W0;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) Wc(i, j) -= R;
        if (det(Cc + Dc * Wc) != 0) {
          W = Wc;
          found = true;
          break;
        }
      }
  } else {
    Int mod = 1;
    std::mt19937_64 rng(0x5eed);
    for (const Int& q : primes) {
      IntMatrix Wq;
      bool found = false;
      long ql = q.get_si();
      long cells = static_cast<long>(n * (n + 1) / 2);
      if (q.fits_slong_p() && std::pow(static_cast<double>(ql), cells) <= 4096.0) {
        for (const auto& cand : symmetric_mod(n, ql)) {
          spend();
          if (mod_floor(det(Cc + Dc * cand), q) != 0) {
            Wq = cand;
            found = true;
            break;
          }
        }
      } else {
        gmp_randclass gr(gmp_randinit_default);
        gr.seed(static_cast<unsigned long>(rng()));
        while (!found) {
          spend();
          IntMatrix cand(n, n);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) cand(i, j) = cand(j, i) = gr.get_z_range(q);
          if (mod_floor(det(Cc + Dc * cand), q) != 0) {
            Wq = cand;
            found = true;
          }
        }
      }
      if (!found) throw std::logic_error("coprime pair: no local solution at " + to_string(q));
      // CRT: W = W (mod mod), W = Wq (mod q)
      Int inv;
      mpz_invert(inv.get_mpz_t(), mod.get_mpz_t(), q.get_mpz_t());
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          Int t = mod_floor((Wq(i, j) - W(i, j)) * inv, q);
          W(i, j) = W(i, j) + mod * t;
        }
      mod *= q;
    }
  }
  M = M * iblock2(I, Z, W, I);
  Cc = Cc + Dc * W;
  Int lambda = det(Cc);
  if (lambda == 0 || gcd(lambda, kappa) != 1) throw std::logic_error("coprime pair: reduction failed");
  Int eta = 0;
  Int al = abs(lambda);
  if (al != 1) mpz_invert(eta.get_mpz_t(), Int(mod_floor(kappa, al)).get_mpz_t(), al.get_mpz_t());
  // B = (eta kappa - 1) tC^-1 = ((eta kappa - 1)/lambda) cof(C); A = eta kappa tD^-1 = eta cof(D)
  Int ek1 = eta * kappa - 1;
  if (ek1 % lambda != 0) throw std::logic_error("coprime pair: eta choice");
  Int f = ek1 / lambda;
  IntMatrix B = adjugate_t(Cc);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) B(i, j) *= f;
  IntMatrix A = adjugate_t(Dc);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) A(i, j) *= eta;
  Completion out;
  out.Gprime = iblock2(A, B, Cc, Dc);
  out.M = M;
  out.G = out.Gprime * symp_inverse(M);
  return out;
}

RatMatrix delta_inverse_tp(int n, long p) {
  std::vector<Rational> d(2 * n, Rational(1));
  for (int i = 0; i < n; ++i) d[i] = make_rational(1, p);
  return diag_rat(d);
}

RatMatrix delta_inverse_tj(int n, long p, int j) {
  if (j < 0 || j > n) throw std::invalid_argument("T_j needs 0 <= j <= n");
  std::vector<Rational> d(2 * n, Rational(1));
  for (int i = 0; i < j; ++i) {
    d[i] = make_rational(1, p);
    d[n + i] = p;
  }
  return diag_rat(d);
}

std::vector<CosetRep> gen_reps_tp(int n, long p, std::size_t budget) {
  if (p < 3 || p % 2 == 0) throw std::invalid_argument("T(p) needs an odd prime");
  auto F = make_fq(static_cast<int>(p));
  std::vector<CosetRep> out;
  for (int r = 0; r <= n; ++r) {
    auto subspaces = enumerate_subspaces(*F, n, r);
    auto Ys = symmetric_mod(r, p);
    for (const auto& S : subspaces) {
      // U: rows of the echelon basis, then unit vectors at non-pivot columns; det U = +-1.
      IntMatrix U(n, n);
      std::vector<bool> pivot(n, false);
      for (int i = 0; i < r; ++i) {
        for (int c = 0; c < n; ++c) U(i, c) = S[i][c];
        for (int c = 0; c < n; ++c)
          if (S[i][c] != 0) {
            pivot[c] = true;
            break;
          }
      }
      int row = r;
      for (int c = 0; c < n; ++c)
        if (!pivot[c]) U(row++, c) = 1;
      IntMatrix UtInv = to_int(inverse(to_rational(U))).transpose();
      for (const auto& Y0 : Ys) {
        if (out.size() >= budget) throw BudgetExceeded("gen_reps_tp exceeded the budget");
        IntMatrix A0(n, n), B0(n, n), C0(n, n), D0(n, n);
        for (int i = 0; i < r; ++i) {
          A0(i, i) = 1;
          D0(i, i) = 1;
          for (int jj = 0; jj < r; ++jj) B0(i, jj) = Y0(i, jj);
        }
        for (int i = r; i < n; ++i) {
          B0(i, i) = 1;
          C0(i, i) = -1;
        }
        out.push_back({iblock2(A0 * U, B0 * UtInv, C0 * U, D0 * UtInv), r});
      }
    }
  }
  return out;
}

std::vector<CosetRep> orbit_reps(const RatMatrix& delta_inv, long p, std::size_t budget) {
  std::size_t N = delta_inv.rows(), n = N / 2;
  long mod = p * p;
  IntMatrix pd = to_int(delta_inv.scaled(Rational(p)));
  IntMatrix I = IntMatrix::identity(n), Z(n, n);
  std::vector<IntMatrix> gens;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      IntMatrix E(n, n);
      E(i, j) = 1;
      E(j, i) = 1;
      gens.push_back(iblock2(I, E, Z, I));
    }
  gens.push_back(iblock2(Z, I, -I, Z));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) {
        IntMatrix U = I;
        U(i, j) = 1;
        IntMatrix Ut = I;
        Ut(j, i) = -1;
        gens.push_back(iblock2(U, Z, Z, Ut));
      }
  // key: canonical HNF of the submodule p Z^{2n} delta^-1 gamma + p^2 Z^{2n}, mod p^2
  auto key_of = [&](const IntMatrix& gamma) {
    IntMatrix rowsM = pd * gamma;
    IntMatrix Mt(N, 2 * N);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) Mt(j, i) = mod_floor(rowsM(i, j), mod);
    for (std::size_t j = 0; j < N; ++j) Mt(j, N + j) = mod;
    IntMatrix H = hnf(Mt).H;
    std::vector<long> key;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j <= i; ++j) key.push_back(H(i, j).get_si());
    return key;
  };
  std::map<std::vector<long>, std::size_t> seen;
  std::vector<CosetRep> out;
  std::deque<std::size_t> queue;
  out.push_back({IntMatrix::identity(N), -1});
  seen[key_of(out[0].gamma)] = 0;
  queue.push_back(0);
  while (!queue.empty()) {
    std::size_t cur = queue.front();
    queue.pop_front();
    for (const auto& g : gens) {
      IntMatrix next = out[cur].gamma * g;
      auto k = key_of(next);
      if (seen.count(k)) continue;
      if (out.size() >= budget) throw BudgetExceeded("coset orbit enumeration exceeded the budget");
      seen[k] = out.size();
      out.push_back({next, -1});
      queue.push_back(out.size() - 1);
    }
  }
  return out;
}

std::vector<CosetRep> gen_reps_tj(int n, long p, int j, std::size_t budget) {
  if (p < 3 || p % 2 == 0) throw std::invalid_argument("T_j(p^2) needs an odd prime");
  if (j < 1 || j > n) throw std::invalid_argument("T_j(p^2) needs 1 <= j <= n");
  return orbit_reps(delta_inverse_tj(n, p, j), p, budget);
}

bool pairwise_inequivalent(const std::vector<CosetRep>& reps, const RatMatrix& delta_inv) {
  // gamma gamma'^-1 in delta Gamma delta^-1 iff x_ab d_a / d_b is integral, d = diag(delta^-1).
  std::size_t N = delta_inv.rows();
  std::vector<Rational> d(N);
  long maxden = 1;
  for (std::size_t i = 0; i < N; ++i) {
    d[i] = delta_inv(i, i);
    maxden = std::max(maxden, std::max(d[i].get_den().get_si(), d[i].get_num().get_si()));
  }
  // residues mod maxden^2 decide every condition
  long mod = maxden * maxden;
  auto reduce = [&](const IntMatrix& g) {
    std::vector<long> v(N * N);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) v[i * N + j] = mod_floor(g(i, j), mod).get_si();
    return v;
  };
  std::vector<std::vector<long>> fwd, inv;
  for (const auto& r : reps) {
    fwd.push_back(reduce(r.gamma));
    inv.push_back(reduce(symp_inverse(r.gamma)));
  }
  std::vector<long> need(N * N);  // x_ab must be divisible by need
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = 0; b < N; ++b) {
      Rational f = d[a] / d[b];
      need[a * N + b] = f.get_den().get_si();
    }
  for (std::size_t x = 0; x < reps.size(); ++x)
    for (std::size_t y = x + 1; y < reps.size(); ++y) {
      bool inside = true;
      for (std::size_t a = 0; a < N && inside; ++a)
        for (std::size_t b = 0; b < N && inside; ++b) {
          if (need[a * N + b] == 1) continue;
          long s = 0;
          for (std::size_t c = 0; c < N; ++c) s = (s + fwd[x][a * N + c] * inv[y][c * N + b]) % mod;
          if (s % need[a * N + b] != 0) inside = false;
        }
      if (inside) return false;
    }
  return true;
}

Int count_nonsingular_symmetric(int m, long p) {
  if (m == 0) return 1;
  Int c = 0;
  for (const auto& Y : symmetric_mod(m, p))
    if (mod_floor(det(Y), p) != 0) ++c;
  return c;
}

namespace {
std::vector<IntermediateLattice> standard_strata(int n, long p, bool inside) {
  std::vector<std::vector<long>> g(n, std::vector<long>(n, 0));
  for (int i = 0; i < n; ++i) g[i][i] = 2;
  PseudoLattice L = make_lattice_q(g);
  auto P = L.K->primes_above(p).at(0);
  return enumerate_intermediate(L, P, inside);
}
}  // namespace

Int structural_count_tp(int n, long p) {
  Int total = 0;
  for (const auto& om : standard_strata(n, p, true)) total += ipow_l(p, om.r0 * (om.r0 + 1) / 2);
  return total;
}

Int structural_count_tj(int n, long p, int j) {
  Int total = 0;
  for (const auto& om : standard_strata(n, p, false)) {
    int r1 = om.m1 - n + j;
    if (r1 < 0) continue;
    Int w0 = ipow_l(p, om.r0 * (om.r0 + 1));
    Int w23 = ipow_l(p, om.r0 * r1 + om.r0 * (n - j));
    total += beta(om.m1, r1, p) * w0 * count_nonsingular_symmetric(r1, p) * w23;
  }
  return total;
}

Triangular triangularize(const RatMatrix& g, std::size_t budget) {
  std::size_t N = g.rows(), n = N / 2;
  RatMatrix G1 = g.block(0, 0, N, n);
  Int den = common_denominator(G1);
  IntMatrix Gi = scale_to_int(G1, den);
  IntMatrix K = int_kernel(Gi.transpose());  // columns x with tG1 x = 0
  if (K.cols() != n) throw std::logic_error("triangularize: kernel rank");
  IntMatrix c(n, n), d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t jj = 0; jj < n; ++jj) {
      c(i, jj) = K(jj, i);
      d(i, jj) = K(n + jj, i);
    }
  Completion comp = complete_coprime_pair(c, d, budget);
  RatMatrix u = to_rational(comp.G) * g;
  Triangular t;
  t.A = u.block(0, 0, n, n);
  t.B = u.block(0, n, n, n);
  t.D = u.block(n, n, n, n);
  if (!u.block(n, 0, n, n).is_zero()) throw std::logic_error("triangularize: lower block is not zero");
  RatMatrix AD = t.A * t.D.transpose();
  t.nu = AD(0, 0);
  if (AD != RatMatrix::identity(n).scaled(t.nu)) throw std::logic_error("triangularize: not a similitude");
  return t;
}

bool is_even_integral_z(const RatMatrix& T) {
  for (std::size_t i = 0; i < T.rows(); ++i)
    for (std::size_t j = 0; j < T.cols(); ++j) {
      if (!is_integer(T(i, j))) return false;
      if (i == j && T(i, i).get_num() % 2 != 0) return false;
    }
  return true;
}

namespace {

struct RepData {
  RatMatrix D, Sp;  // Sp = B D^-1
  Rational nu_inv, weight;
};

std::vector<RepData> prepare(const std::vector<CosetRep>& reps, const RatMatrix& dinv, long p, int k, bool tp,
                             std::size_t budget) {
  std::vector<RepData> out;
  std::size_t n = dinv.rows() / 2;
  for (const auto& r : reps) {
    Triangular t = triangularize(dinv * to_rational(r.gamma), budget);
    RepData rd;
    rd.D = t.D;
    rd.Sp = t.B * inverse(t.D);
    rd.nu_inv = Rational(1) / t.nu;
    // nu^{nk/2} det(D)^-k, times p^{n(k-n-1)/2} for T(p); nu = 1/p there, so the powers of p combine.
    Rational dd = det(t.D);
    if (tp) {
      if (t.nu != make_rational(1, p)) throw std::logic_error("T(p) representative with wrong multiplier");
      rd.weight = rpow(Rational(p), -static_cast<long>(n * (n + 1) / 2)) * rpow(dd, -k);
    } else {
      if (t.nu != 1) throw std::logic_error("T_j representative with wrong multiplier");
      rd.weight = rpow(dd, -k);
    }
    out.push_back(rd);
  }
  return out;
}

// Coefficient of the slashed sum at S; false when a needed input coefficient is unknown.
bool evaluate(const SeriesQ& f, const std::vector<RepData>& reps, long p, const IntMatrix& S, Cyclotomic& value) {
  unsigned long M = static_cast<unsigned long>(p * p);
  CycloAccumulator acc(M);
  RatMatrix Sr = to_rational(S);
  for (const auto& r : reps) {
    RatMatrix T = (r.D * Sr * r.D.transpose()).scaled(r.nu_inv);
    if (!is_even_integral_z(T)) continue;
    IntMatrix Ti = to_int(T);
    if (!f.known(Ti)) return false;
    Rational c = f.coeff(Ti);
    if (c == 0) continue;
    Rational x = 0;  // e{T Sp} = exp(2 pi i x)
    RatMatrix TS = T * r.Sp;
    for (std::size_t i = 0; i < TS.rows(); ++i) x += TS(i, i);
    x /= 2;
    Int den = x.get_den();
    if (Int(M) % den != 0) throw std::logic_error("direct_apply: root of unity outside mu_{p^2}");
    long e = mod_floor(x.get_num() * (Int(M) / den), Int(M)).get_si();
    acc.add(e, r.weight * c);
  }
  value = acc.value();
  return true;
}

}  // namespace

DirectResult direct_apply(const SeriesQ& f, HeckeOp op, long p, int k, int j, const std::vector<IntMatrix>& candidates,
                          std::size_t budget) {
  int n = f.n;
  if (p < 3 || p % 2 == 0) throw std::invalid_argument("direct_apply needs an odd prime");
  DirectResult res;
  std::vector<std::vector<RepData>> parts;
  std::vector<Rational> coef;
  bool identity_part = false;
  Rational identity_coef = 0;
  if (op == HeckeOp::TP) {
    auto reps = gen_reps_tp(n, p, budget);
    res.reps = reps.size();
    parts.push_back(prepare(reps, delta_inverse_tp(n, p), p, k, true, budget));
    coef.push_back(1);
  } else if (op == HeckeOp::TJ) {
    auto reps = gen_reps_tj(n, p, j, budget);
    res.reps = reps.size();
    parts.push_back(prepare(reps, delta_inverse_tj(n, p, j), p, k, false, budget));
    coef.push_back(1);
  } else {
    if (j < 1 || j > n) throw std::invalid_argument("T~_j needs 1 <= j <= n");
    // p^{j(k-n-1)} sum_l beta(n-l, j-l) T_l(p^2), T_0 the identity; the S_i(P) act trivially at level one.
    Rational norm = rpow(Rational(p), static_cast<long>(j) * (k - n - 1));
    identity_part = true;
    identity_coef = norm * Rational(beta(n, j, p));
    for (int l = 1; l <= j; ++l) {
      auto reps = gen_reps_tj(n, p, l, budget);
      res.reps += reps.size();
      parts.push_back(prepare(reps, delta_inverse_tj(n, p, l), p, k, false, budget));
      coef.push_back(norm * Rational(beta(n - l, j - l, p)));
    }
  }
  for (const auto& S : candidates) {
    if (static_cast<int>(S.rows()) != n) throw std::invalid_argument("direct_apply: candidate of wrong size");
    Cyclotomic total = 0;
    bool ok = true;
    if (identity_part) {
      if (!f.known(S)) ok = false;
      else total += Cyclotomic(identity_coef * f.coeff(S));
    }
    for (std::size_t i = 0; i < parts.size() && ok; ++i) {
      Cyclotomic v;
      if (!evaluate(f, parts[i], p, S, v)) ok = false;
      else total += Cyclotomic(coef[i]) * v;
    }
    if (ok) res.values.push_back({S, total});
    else res.dropped.push_back(S);
  }
  return res;
}

}  // namespace hsm
