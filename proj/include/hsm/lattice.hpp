#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hsm/finitequad.hpp"
#include "hsm/numberfield.hpp"
#include "json.hpp"

namespace hsm {

using KMatrix = Matrix<FieldElement>;

// Lambda = I_1 x_1 + ... + I_n x_n inside K^n. Columns of `basis` are the x_i in
// ambient coordinates; `ambient` is the symmetric bilinear form B on K^n.
// Intermediate lattices share the ambient data of their parent.
struct PseudoLattice {
  QuadFieldPtr K;
  int n = 0;
  std::vector<FracIdeal> ideals;
  KMatrix basis;
  KMatrix ambient;
  FracIdeal J;
  int orientation = 1;

  KMatrix gram() const;  // B(x_i, x_j)
};

// Lattice with pseudo-basis the standard basis; ideals default to O.
PseudoLattice make_lattice(QuadFieldPtr K, const KMatrix& gram, const FracIdeal& J,
                           std::vector<FracIdeal> ideals = {}, int orientation = 1);
PseudoLattice make_lattice_q(const std::vector<std::vector<long>>& gram, long scale = 1);
PseudoLattice with_scaling(PseudoLattice L, const FracIdeal& J);

bool is_even_integral(const PseudoLattice& L);
bool is_positive_semidefinite(const PseudoLattice& L);
bool is_nondegenerate(const PseudoLattice& L);

// Same module, pseudo-basis with every ideal O. Needs a principal ideal domain.
PseudoLattice free_presentation(const PseudoLattice& L);

struct InvariantFactors {
  std::vector<FracIdeal> A;   // A_1 | A_2 | ... (A_{i+1} inside A_i)
  std::optional<IntMatrix> U, V;  // K = Q only: SNF witness of the coordinate change
};
InvariantFactors invariant_factors(const PseudoLattice& Lambda, const PseudoLattice& Omega);
int multiplicity(const InvariantFactors& f, const FracIdeal& A);

struct IntermediateLattice {
  PseudoLattice omega;
  int r0 = 0, m1 = 0, r2 = 0;  // multiplicities of P, O, P^-1 in {Lambda:Omega}
};

std::size_t lattice_budget();  // HECKE_LATTICE_BUDGET or the default cap

// All Omega with P Lambda <= Omega <= P^-1 Lambda (or <= Lambda when inside_lambda).
std::vector<IntermediateLattice> enumerate_intermediate(const PseudoLattice& L, const PrimeIdeal& P,
                                                        bool inside_lambda = false,
                                                        std::size_t budget = lattice_budget());

// (Lambda cap Omega)/P(Lambda + Omega) with the form alpha Q / 2, alpha O_P = J O_P.
QuadSpaceFq residue_space(const PseudoLattice& Lambda, const PseudoLattice& Omega, const PrimeIdeal& P,
                          const std::optional<FieldElement>& alpha = std::nullopt);

// Canonical class of the scaled form alpha*B on a free basis, alpha >> 0 generating J.
struct LatticeKey {
  long d = 1;
  int n = 0;
  std::vector<FieldElement> entries;  // upper triangle, row-major
  int orient = 0;                     // 0 unless requested and no improper automorphism exists

  bool operator==(const LatticeKey& o) const;
  bool operator!=(const LatticeKey& o) const { return !(*this == o); }
  bool operator<(const LatticeKey& o) const;
  std::string to_string() const;
  // Entry (i, j) of the canonical scaled Gram matrix.
  FieldElement at(int i, int j) const;
};

LatticeKey canonical_key(const PseudoLattice& L, bool oriented = false, std::size_t budget = lattice_budget());
// Canonical representative of an integral positive semi-definite matrix under GL_n(Z).
RatMatrix canonical_form_z(const RatMatrix& T, std::size_t budget = lattice_budget());
LatticeKey key_from_matrix_z(const RatMatrix& T, std::size_t budget = lattice_budget());

bool elt_less(const FieldElement& x, const FieldElement& y);

nlohmann::json to_json(const PseudoLattice& L);
PseudoLattice lattice_from_json(const nlohmann::json& j);
nlohmann::json ideal_to_json(const FracIdeal& A);
FracIdeal ideal_from_json(const QuadField& K, const nlohmann::json& j);

// K-linear algebra on small matrices.
FieldElement det_k(const KMatrix& M);
KMatrix inverse_k(const KMatrix& M);

}  // namespace hsm
