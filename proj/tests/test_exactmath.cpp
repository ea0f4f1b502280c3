#include <random>

#include "doctest.h"
#include "hsm/exactmath.hpp"

using namespace hsm;

namespace {

IntMatrix random_int_matrix(std::mt19937& rng, std::size_t r, std::size_t c, int bound) {
  std::uniform_int_distribution<int> d(-bound, bound);
  IntMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

bool is_column_hnf(const IntMatrix& H) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < H.rows() && k < H.cols(); ++i) {
    for (std::size_t j = k + 1; j < H.cols(); ++j)
      if (H(i, j) != 0) return false;
    if (H(i, k) == 0) continue;
    if (H(i, k) < 0) return false;
    for (std::size_t j = 0; j < k; ++j)
      if (H(i, j) < 0 || H(i, j) >= H(i, k)) return false;
    ++k;
  }
  for (std::size_t j = k; j < H.cols(); ++j)
    for (std::size_t i = 0; i < H.rows(); ++i)
      if (H(i, j) != 0) return false;
  return true;
}

Int gcd_of_minors_1(const IntMatrix& m) {
  Int g = 0;
  for (const auto& x : m.data()) g = gcd(g, x);
  return g;
}

}  // namespace

TEST_CASE("hnf of small examples") {
  IntMatrix m{{2, 4}, {0, 2}};
  auto h = hnf(m);
  CHECK(h.H == IntMatrix{{2, 0}, {0, 2}});
  CHECK(m * h.U == h.H);
  CHECK(abs(det(h.U)) == 1);

  auto id = hnf(IntMatrix::identity(3));
  CHECK(id.H == IntMatrix::identity(3));
  CHECK(id.U == IntMatrix::identity(3));

  auto z = hnf(IntMatrix(2, 2));
  CHECK(z.H.is_zero());
  CHECK(z.U == IntMatrix::identity(2));
  CHECK(z.rank == 0);
}

TEST_CASE("hnf is idempotent, unimodular and echelon on random input") {
  std::mt19937 rng(7);
  for (int it = 0; it < 300; ++it) {
    std::size_t r = 1 + rng() % 5, c = 1 + rng() % 6;
    IntMatrix m = random_int_matrix(rng, r, c, 9);
    auto h = hnf(m);
    CHECK(m * h.U == h.H);
    CHECK(abs(det(h.U)) == 1);
    CHECK(is_column_hnf(h.H));
    CHECK(hnf(h.H).H == h.H);
  }
}

TEST_CASE("int_kernel is a saturated kernel basis") {
  IntMatrix m{{2, 4, 6}};
  IntMatrix k = int_kernel(m);
  CHECK(k.cols() == 2);
  CHECK((m * k).is_zero());
  // Saturation: the kernel lattice has gcd of maximal minors 1.
  Int g = 0;
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b) g = gcd(g, k(a, 0) * k(b, 1) - k(a, 1) * k(b, 0));
  CHECK(g == 1);
}

TEST_CASE("snf small examples") {
  auto s = snf(IntMatrix{{2, 0}, {0, 3}});
  CHECK(s.D == IntMatrix{{1, 0}, {0, 6}});
  CHECK(snf(IntMatrix::identity(3)).D == IntMatrix::identity(3));
  auto p = snf(IntMatrix{{5, 0}, {0, 5}});
  CHECK(p.D == IntMatrix{{5, 0}, {0, 5}});
}

TEST_CASE("snf divisibility chain and determinant on random input") {
  std::mt19937 rng(11);
  for (int it = 0; it < 300; ++it) {
    std::size_t r = 1 + rng() % 4, c = 1 + rng() % 4;
    IntMatrix m = random_int_matrix(rng, r, c, 12);
    auto s = snf(m);
    CHECK(s.U * m * s.V == s.D);
    CHECK(abs(det(s.U)) == 1);
    CHECK(abs(det(s.V)) == 1);
    std::size_t n = std::min(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j)
        if (i != j) CHECK(s.D(i, j) == 0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      CHECK(s.D(i, i) >= 0);
      if (s.D(i, i) != 0) CHECK(s.D(i + 1, i + 1) % s.D(i, i) == 0);
      else CHECK(s.D(i + 1, i + 1) == 0);
    }
    CHECK(s.D(0, 0) == gcd_of_minors_1(m));
    if (r == c) {
      Int prod = 1;
      for (std::size_t i = 0; i < n; ++i) prod *= s.D(i, i);
      CHECK(prod == abs(det(m)));
    }
  }
}

TEST_CASE("det and inverse agree") {
  std::mt19937 rng(3);
  for (int it = 0; it < 100; ++it) {
    IntMatrix m = random_int_matrix(rng, 4, 4, 5);
    Rational d = det(to_rational(m));
    CHECK(d == Rational(det(m)));
    if (d != 0) CHECK(to_rational(m) * inverse(to_rational(m)) == RatMatrix::identity(4));
  }
}

TEST_CASE("rational parsing") {
  CHECK(parse_rational("22/7") == Rational(22, 7));
  CHECK(parse_rational("-4/6") == Rational(-2, 3));
  CHECK(to_string(parse_rational("6/3")) == "2");
  CHECK_THROWS(parse_rational("1/0"));
  CHECK_THROWS(parse_rational("x"));
  CHECK_THROWS(parse_rational("1.5"));
}

TEST_CASE("roots of unity") {
  CHECK(cyclo_root_of_unity(4, 2) == Cyclotomic(-1));
  CHECK(cyclo_root_of_unity(7, 0) == Cyclotomic(1));
  CHECK(cyclo_root_of_unity(3, 1) * cyclo_root_of_unity(3, 2) == Cyclotomic(1));
  CHECK(cyclo_root_of_unity(5, -1) == cyclo_root_of_unity(5, 4));
  CHECK_THROWS(cyclo_root_of_unity(0, 1));
  CHECK(cyclo_root_of_unity(6, 2) == cyclo_root_of_unity(3, 1));
  CHECK(cyclo_root_of_unity(3, 2).to_string() == "-zeta3 - 1");
  CHECK((cyclo_root_of_unity(3, 1) - Cyclotomic(1)).to_string() == "zeta3 - 1");
}

TEST_CASE("cyclotomic ring properties") {
  for (unsigned long m : {2ul, 3ul, 4ul, 6ul, 8ul, 9ul, 12ul, 15ul, 25ul, 36ul}) {
    Cyclotomic s;
    for (unsigned long e = 0; e < m; ++e) s += cyclo_root_of_unity(m, static_cast<long long>(e));
    CHECK(s.is_zero());
    Cyclotomic z = cyclo_root_of_unity(m, 1);
    CHECK(z.pow(static_cast<long long>(m)) == Cyclotomic(1));
  }
  std::mt19937 rng(5);
  auto rnd = [&](unsigned long m) {
    Cyclotomic x;
    for (int t = 0; t < 4; ++t)
      x += Cyclotomic(make_rational(static_cast<long>(rng() % 7) - 3, 1 + rng() % 3)) *
           cyclo_root_of_unity(m, rng() % m);
    return x;
  };
  for (int it = 0; it < 50; ++it) {
    Cyclotomic a = rnd(9), b = rnd(12), c = rnd(4);
    CHECK((a + b) + c == a + (b + c));
    CHECK((a * b) * c == a * (b * c));
    CHECK(a * (b + c) == a * b + a * c);
    if (!a.is_zero()) CHECK(a * a.pow(-1) == Cyclotomic(1));
  }
}

TEST_CASE("square roots of primes") {
  for (unsigned long p : {3ul, 5ul, 7ul, 11ul, 13ul}) {
    Cyclotomic s = cyclo_sqrt_prime(p);
    CHECK(s * s == Cyclotomic(static_cast<long>(p)));
    CHECK(!s.is_rational());
  }
}

TEST_CASE("accumulator matches repeated addition") {
  CycloAccumulator acc(9);
  Cyclotomic direct;
  for (int e = -20; e < 20; e += 3) {
    acc.add(e, Rational(e));
    direct += Cyclotomic(Rational(e)) * cyclo_root_of_unity(9, e);
  }
  CHECK(acc.value() == direct);
}
