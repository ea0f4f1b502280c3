#include "verify_suites.hpp"

#include <chrono>
#include <map>
#include <random>
#include <sstream>

#include "hsm/finitequad.hpp"
#include "hsm/oracles.hpp"

namespace hsm::verify {

namespace {

using Clock = std::chrono::steady_clock;

QuadFieldPtr field(long d) { return std::make_shared<const QuadField>(d); }

// Runs body, catching exceptions as failures; body fills ok and detail.
SuiteResult timed(int id, const std::string& name, double limit,
                  const std::function<void(bool&, std::ostringstream&)>& body) {
  SuiteResult r;
  r.id = id;
  r.name = name;
  r.limit = limit;
  std::ostringstream detail;
  auto t0 = Clock::now();
  try {
    bool ok = true;
    body(ok, detail);
    r.ok = ok;
  } catch (const std::exception& e) {
    r.ok = false;
    detail << " exception: " << e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  r.detail = detail.str();
  return r;
}

PseudoLattice lattice_of(const IntMatrix& S) {
  std::vector<std::vector<long>> g(S.rows(), std::vector<long>(S.cols()));
  for (std::size_t i = 0; i < S.rows(); ++i)
    for (std::size_t j = 0; j < S.cols(); ++j) g[i][j] = S(i, j).get_si();
  return make_lattice_q(g);
}

IntMatrix random_symplectic(int n, std::mt19937_64& rng, int steps) {
  std::uniform_int_distribution<int> pick(0, 3), val(-3, 3), idx(0, n - 1);
  IntMatrix g = IntMatrix::identity(2 * n);
  for (int s = 0; s < steps; ++s) {
    IntMatrix h = IntMatrix::identity(2 * n);
    int kind = pick(rng), i = idx(rng), j = idx(rng);
    if (kind == 0) {
      h(i, n + j) += val(rng);
      if (i != j) h(j, n + i) = h(i, n + j);
    } else if (kind == 1) {
      h(n + i, j) += val(rng);
      if (i != j) h(n + j, i) = h(n + i, j);
    } else if (kind == 2 && i != j) {
      int v = val(rng);
      h(i, j) = v;
      h(n + j, n + i) = -v;
    } else {
      h = IntMatrix(2 * n, 2 * n);
      for (int t = 0; t < n; ++t) {
        h(t, n + t) = 1;
        h(n + t, t) = -1;
      }
    }
    g = g * h;
  }
  return g;
}

// Deterministic coefficient per key, zero off the even integral keys.
CoefficientOracle hashed_oracle() {
  return {[](const LatticeKey& key) {
    if (!key_is_even_integral(key)) return Cyclotomic(0);
    unsigned long h = 1469598103934665603UL;
    for (char c : key.to_string()) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211UL;
    return Cyclotomic(Rational(static_cast<long>(h % 1009) - 504));
  }};
}

KMatrix kgram(const QuadField& K, const std::vector<std::vector<std::string>>& rows) {
  KMatrix M(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j) M(i, j) = parse_element(rows[i][j], K.d());
  return M;
}

FieldElement random_nonzero(const QuadField& K, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> v(-3, 3);
  while (true) {
    FieldElement x = K.elt(v(rng), K.degree() == 2 ? v(rng) : 0);
    if (!(x == K.elt(0))) return x;
  }
}

// A random re-presentation of the same Lambda^J: unimodular change, ideal re-choice, or J -> gamma^2 J with
// the basis divided by gamma.
PseudoLattice represent(const PseudoLattice& L, std::mt19937_64& rng, std::string& kinds) {
  const QuadField& K = *L.K;
  PseudoLattice M = L;
  int n = L.n;
  int mask = 1 + static_cast<int>(rng() % 7);
  if (mask & 1) {
    KMatrix U = KMatrix::identity(n);
    for (int s = 0; s < 4; ++s) {
      int i = static_cast<int>(rng() % n), j = static_cast<int>(rng() % n);
      if (i == j) continue;
      KMatrix E = KMatrix::identity(n);
      E(i, j) = K.elt(static_cast<long>(rng() % 5) - 2, K.degree() == 2 ? static_cast<long>(rng() % 3) - 1 : 0);
      U = U * E;
    }
    if (rng() % 2)
      for (int i = 0; i < n; ++i) U(i, 0) = U(i, 0) * K.elt(-1);
    if (K.degree() == 2 && rng() % 2)
      for (int i = 0; i < n; ++i) U(i, n - 1) = U(i, n - 1) * K.fundamental_unit();
    M.basis = M.basis * U;
    kinds += "U";
  }
  if (mask & 2) {
    int i = static_cast<int>(rng() % n);
    FieldElement b = random_nonzero(K, rng);
    M.ideals[i] = K.scale(M.ideals[i], b);
    for (std::size_t r = 0; r < M.basis.rows(); ++r) M.basis(r, i) = M.basis(r, i) / b;
    kinds += "I";
  }
  if (mask & 4) {
    FieldElement g = random_nonzero(K, rng);
    for (std::size_t r = 0; r < M.basis.rows(); ++r)
      for (std::size_t c = 0; c < M.basis.cols(); ++c) M.basis(r, c) = M.basis(r, c) / g;
    M = with_scaling(M, K.scale(M.J, g * g));
    kinds += "J";
  }
  return M;
}

}  // namespace

nlohmann::json SuiteResult::to_json() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", seconds);
  return {{"id", id}, {"name", name}, {"ok", ok}, {"pass", pass()}, {"seconds", std::string(buf)},
          {"limit_seconds", limit}, {"detail", detail}};
}

SuiteResult isotropic_grid_suite(bool quick) {
  return timed(1, "isotropic subspace counts, closed form vs brute force", 60, [&](bool& ok, std::ostringstream& d) {
    for (int q : {3, 5})
      for (int dim = 1; dim <= (quick ? (q == 3 ? 3 : 2) : 4); ++dim) {
        auto rep = isotropic_grid(Fq(q), dim);
        d << " q=" << q << " dim=" << dim << ":" << rep.matrices << "/" << rep.mismatches;
        if (rep.mismatches != 0 || rep.matrices == 0) ok = false;
      }
  });
}

SuiteResult stratification_suite(bool quick) {
  return timed(2, "rank stratification bijection and character sums", 120, [&](bool& ok, std::ostringstream& d) {
    for (int q : {3, 5})
      for (int r1 = 1; r1 <= (quick ? 2 : 3); ++r1) {
        auto rep = rank_stratify(Fq(q), r1);
        d << " q=" << q << " r1=" << r1 << ":" << (rep.ok() ? "ok" : "FAIL");
        if (!rep.ok()) ok = false;
      }
  });
}

SuiteResult tp_representatives_suite(bool quick) {
  return timed(3, "T(p) coset counts and pairwise inequivalence", 300, [&](bool& ok, std::ostringstream& d) {
    for (int n : {1, 2})
      for (long p : {3L, 5L}) {
        if (quick && p == 5) continue;
        auto reps = gen_reps_tp(n, p);
        Int expect = 0;
        for (int r = 0; r <= n; ++r) expect += beta(n, r, p) * ipow(Int(p), r * (r + 1) / 2);
        d << " (n=" << n << ",p=" << p << "):" << reps.size() << "/" << expect;
        if (Int(reps.size()) != expect) ok = false;
        for (const auto& r : reps)
          if (!is_member_z(to_rational(r.gamma))) ok = false;
      }
    bool ineq = pairwise_inequivalent(gen_reps_tp(2, 3), delta_inverse_tp(2, 3));
    d << " inequivalent(2,3):" << (ineq ? "yes" : "no");
    ok = ok && ineq;
  });
}

SuiteResult coprime_completion_suite(bool quick) {
  return timed(4, "symmetric coprime pair completion", 60, [&](bool& ok, std::ostringstream& d) {
    std::mt19937_64 rng(20240521);
    int trials = quick ? 100 : 1000, failures = 0, singular = 0;
    for (int t = 0; t < trials; ++t) {
      int n = 1 + t % 2;
      IntMatrix g = random_symplectic(n, rng, 2 + static_cast<int>(rng() % 9));
      IntMatrix C = g.block(n, 0, n, n), D = g.block(n, n, n, n);
      if (det(D) == 0) ++singular;
      auto res = complete_coprime_pair(C, D);
      bool good = is_member_z(to_rational(res.G)) && res.G.block(n, 0, n, n) == C && res.G.block(n, n, n, n) == D;
      if (!good) ++failures;
    }
    d << " pairs=" << trials << " singular_D=" << singular << " failures=" << failures;
    ok = failures == 0;
  });
}

SuiteResult sigma_eigenvalue_suite(bool quick) {
  return timed(5, "degree one sigma_3 eigenvalue via the closed form and the coset sum", 30,
               [&](bool& ok, std::ostringstream& d) {
                 const long M = 60;
                 auto series = sigma_series(3, M);
                 auto K = field(1);
                 for (long p : {3L, 5L, 7L}) {
                   if (quick && p != 3) continue;
                   auto ctx = make_context(K, 1, 4, K->primes_above(p).at(0));
                   std::vector<IntMatrix> cand;
                   for (long m = 1; m <= M / p; ++m) cand.push_back(IntMatrix{{2 * m}});
                   auto direct = direct_apply(series, HeckeOp::TP, p, 4, 0, cand);
                   Cyclotomic lambda(Rational(1 + p * p * p));
                   long agree = 0;
                   for (const auto& [S, v] : direct.values) {
                     Cyclotomic c(series.coeff(S));
                     Cyclotomic t = apply_tp(ctx, sigma_oracle(3, M), lattice_of(S)).coefficient;
                     if (v == lambda * c && t == v) ++agree;
                   }
                   bool good = direct.dropped.empty() && agree == static_cast<long>(cand.size());
                   d << " p=" << p << ":" << agree << "/" << cand.size();
                   ok = ok && good;
                 }
               });
}

SuiteResult e8_agreement_suite(bool quick) {
  (void)quick;
  return timed(6, "E8 degree-2 theta: T(3), T~_1(9), T~_2(9) closed form vs coset sum", 1800,
               [&](bool& ok, std::ostringstream& d) {
                 E8Theta2 th(18);
                 auto K = field(1);
                 auto ctx = make_context(K, 2, 4, K->primes_above(3).at(0));
                 std::vector<IntMatrix> window;
                 for (auto [a, b, c] : std::vector<std::array<long, 3>>{
                          {1, 0, 1}, {1, 1, 1}, {1, 0, 2}, {1, 1, 2}, {2, 0, 2}, {2, 1, 2}, {2, 2, 2}})
                   window.push_back(IntMatrix{{2 * a, b}, {b, 2 * c}});
                 d << " window=" << window.size();
                 for (int op = 0; op < 3; ++op) {
                   auto res = op == 0 ? direct_apply(th.series(), HeckeOp::TP, 3, 4, 0, window)
                                      : direct_apply(th.series(), HeckeOp::TJ_TILDE, 3, 4, op, window);
                   std::size_t agree = 0;
                   for (const auto& [S, v] : res.values) {
                     auto L = lattice_of(S);
                     Cyclotomic t = op == 0 ? apply_tp(ctx, th.oracle(), L).coefficient
                                            : apply_tj_tilde(ctx, th.oracle(), L, op).coefficient;
                     if (t == v) ++agree;
                   }
                   d << (op == 0 ? " tp:" : op == 1 ? " tj1:" : " tj2:") << agree << "/" << window.size();
                   if (!res.dropped.empty() || agree != window.size()) ok = false;
                 }
                 ok = ok && window.size() >= 5;
               });
}

SuiteResult presentation_coherence_suite(bool quick) {
  return timed(7, "pseudo-presentation changes: keys and T(P) invariance", 120, [&](bool& ok, std::ostringstream& d) {
    std::mt19937_64 rng(77);
    int trials = quick ? 10 : 50;
    for (long dK : {1L, 5L}) {
      auto K = field(dK);
      std::vector<PseudoLattice> bases;
      std::vector<std::vector<std::vector<std::string>>> grams =
          dK == 1 ? std::vector<std::vector<std::vector<std::string>>>{{{"2", "1"}, {"1", "2"}},
                                                                      {{"2", "0"}, {"0", "4"}},
                                                                      {{"2", "1"}, {"1", "4"}},
                                                                      {{"4", "1"}, {"1", "4"}}}
                  : std::vector<std::vector<std::vector<std::string>>>{{{"2", "w"}, {"w", "4"}},
                                                                      {{"2", "1"}, {"1", "4"}},
                                                                      {{"2", "0"}, {"0", "2"}},
                                                                      {{"4", "1"}, {"1", "4"}}};
      for (const auto& g : grams) bases.push_back(make_lattice(K, kgram(*K, g), K->unit_ideal()));
      auto ctx = make_context(K, 2, 4, K->primes_above(dK == 1 ? 3 : 11).at(0));
      auto f = hashed_oracle();
      std::vector<LatticeKey> keys;
      std::vector<Cyclotomic> values;
      for (const auto& b : bases) {
        keys.push_back(canonical_key(b));
        values.push_back(apply_tp(ctx, f, b).coefficient);
      }
      int bad_keys = 0, bad_values = 0;
      for (std::size_t i = 0; i < keys.size(); ++i)
        for (std::size_t j = i + 1; j < keys.size(); ++j)
          if (keys[i] == keys[j]) ++bad_keys;
      std::map<std::string, int> kinds;
      std::string first_error;
      for (int t = 0; t < trials; ++t) {
        std::size_t b = rng() % bases.size();
        std::string kind;
        auto M = represent(bases[b], rng, kind);
        ++kinds[kind];
        auto key = canonical_key(M);
        bool key_ok = true;
        for (std::size_t i = 0; i < keys.size(); ++i)
          if ((key == keys[i]) != (i == b)) key_ok = false;
        bool value_ok = apply_tp(ctx, f, M).coefficient == values[b];
        if (!key_ok) ++bad_keys;
        if (!value_ok) ++bad_values;
        if ((!key_ok || !value_ok) && first_error.empty())
          first_error = " first error: base " + std::to_string(b) + " change " + kind + " key " + key.to_string() +
                        " expected " + keys[b].to_string();
      }
      d << " d=" << dK << ": trials=" << trials << " key_errors=" << bad_keys << " value_errors=" << bad_values
        << " kinds=";
      for (const auto& [k, c] : kinds) d << k << ":" << c << ",";
      d << first_error;
      if (bad_keys || bad_values) ok = false;
    }
  });
}

SuiteResult numberfield_identities_suite(bool quick) {
  return timed(8, "number field identities", 30, [&](bool& ok, std::ostringstream& d) {
    std::mt19937_64 rng(5);
    int checks = 0;
    for (long dK : {2L, 3L, 5L, 6L, 10L, 13L}) {
      auto K = field(dK);
      for (int t = 0; t < (quick ? 10 : 40); ++t) {
        FracIdeal A = K->ideal({random_nonzero(*K, rng), random_nonzero(*K, rng)});
        FracIdeal B = K->ideal({random_nonzero(*K, rng) * K->elt(make_rational(1, 1 + rng() % 4)),
                                random_nonzero(*K, rng)});
        if (K->mul(A, K->inv(A)) != K->unit_ideal()) ok = false;
        if (K->norm(K->mul(A, B)) != K->norm(A) * K->norm(B)) ok = false;
        checks += 2;
      }
      for (long p = 2; p <= 50; ++p) {
        bool prime = true;
        for (long q = 2; q * q <= p; ++q)
          if (p % q == 0) prime = false;
        if (!prime) continue;
        FracIdeal prod = K->unit_ideal();
        for (const auto& P : K->primes_above(p)) prod = K->mul(prod, K->pow(P.P, P.e));
        if (prod != K->principal(K->elt(p))) ok = false;
        ++checks;
      }
    }
    int h5 = QuadField(5).class_group().h(), h10 = QuadField(10).class_group().h();
    d << " checks=" << checks << " h(Q(sqrt5))=" << h5 << " h(Q(sqrt10))=" << h10;
    ok = ok && h5 == 1 && h10 == 2;
  });
}

SuiteResult exponent_identities_suite(bool quick) {
  (void)quick;
  return timed(9, "exponent identities on every enumerated Omega", 10, [&](bool& ok, std::ostringstream& d) {
    auto K = field(1);
    long count = 0;
    for (auto [n, p] : std::vector<std::pair<int, long>>{{1, 3}, {2, 3}}) {
      auto ctx = make_context(K, n, 4, K->primes_above(p).at(0));
      std::vector<PseudoLattice> lats = n == 1 ? std::vector<PseudoLattice>{make_lattice_q({{2}}), make_lattice_q({{6}})}
                                               : std::vector<PseudoLattice>{make_lattice_q({{2, 1}, {1, 2}}),
                                                                            make_lattice_q({{2, 0}, {0, 6}})};
      for (const auto& L : lats)
        for (const auto& om : enumerate_intermediate(L, ctx.P)) {
          if (om.r0 + om.m1 + om.r2 != n) ok = false;
          for (int j = 1; j <= n; ++j) {
            auto x = exponents_tj(ctx, om.r0, om.m1, om.r2, j);
            if (x.e != 2 * x.r2 + x.r1 || x.e != x.r2 - x.r0 + j) ok = false;
            ++count;
          }
        }
    }
    d << " (Omega, j) pairs=" << count;
  });
}

const std::vector<Suite>& all_suites() {
  static const std::vector<Suite> suites = {
      {"isotropic-grid", isotropic_grid_suite},       {"stratification", stratification_suite},
      {"tp-representatives", tp_representatives_suite}, {"coprime-completion", coprime_completion_suite},
      {"sigma-eigenvalue", sigma_eigenvalue_suite},   {"e8-agreement", e8_agreement_suite},
      {"coherence", presentation_coherence_suite},    {"numberfield", numberfield_identities_suite},
      {"exponents", exponent_identities_suite},
  };
  return suites;
}

}  // namespace hsm::verify
