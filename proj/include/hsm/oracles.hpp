#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "hsm/coset.hpp"
#include "hsm/hecke.hpp"
#include "json.hpp"

namespace hsm {

// Degree-2 theta series of E8: c(T) = #{(v1, v2) in E8^2 : Gram(v1, v2) = T}, counted by enumerating
// every vector of norm at most 2 qmax. Known exactly for T whose reduced form has both diagonal
// entries at most 2 qmax.
class E8Theta2 {
 public:
  explicit E8Theta2(long qmax);

  long qmax() const { return qmax_; }
  // Number of vectors v with v.v = 2m; m <= qmax.
  std::size_t shell_size(long m) const;
  bool known(const IntMatrix& T) const;
  Int coefficient(const IntMatrix& T) const;  // throws TruncationError when !known(T)

  SeriesQ series() const;
  CoefficientOracle oracle() const;  // over Q, degree 2

 private:
  using Vec = std::array<std::int8_t, 8>;  // doubled coordinates
  // counts[c * width + b + 2 qmax] = #{v2 : v2.v2 = 2c, v1.v2 = b}
  const std::vector<long long>& histogram(const Vec& v1) const;
  long qmax_;
  std::vector<Vec> vecs_;            // sorted by norm
  std::vector<std::size_t> start_;   // start_[m] = first index of norm 2m, m = 0..qmax+1
  mutable std::mutex mu_;
  mutable std::map<long, std::vector<std::pair<Vec, Int>>> orbits_;  // m -> dominant reps with sizes
  mutable std::map<Vec, std::vector<long long>> hist_;
};

// Reduced binary form [2a, b; b, 2c] with 0 <= b <= a <= c (GL_2(Z) class); input PSD with even diagonal.
std::array<Int, 3> reduce_binary(const IntMatrix& T);

// Degree-1 Eisenstein-type oracle c([2m]) = sigma_{w}(m), m <= mmax; c(0) left as 0.
SeriesQ sigma_series(long w, long mmax);
CoefficientOracle sigma_oracle(long w, long mmax);

// Finite table of lattice coefficients. Keys inside the bound and absent from the table are 0;
// keys beyond the bound raise TruncationError.
struct TableOracle {
  QuadFieldPtr K;
  std::map<LatticeKey, Cyclotomic> table;
  Rational bound;  // on the trace of every diagonal entry of the canonical scaled Gram matrix
  CoefficientOracle oracle() const;
};

TableOracle table_oracle_from_json(const nlohmann::json& j);
Cyclotomic parse_cyclotomic(const std::string& s);

}  // namespace hsm
