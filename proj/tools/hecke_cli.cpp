// Command-line entry point. Every command writes one JSON document (sorted keys) to stdout or --out.
// Exit codes: 0 success, 1 failed verification or internal error, 2 validation error, 3 budget error.
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hsm/finitequad.hpp"
#include "hsm/oracles.hpp"
#include "verify_suites.hpp"

using nlohmann::json;
using namespace hsm;

namespace {

struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

json parse_json_arg(const std::string& flag, const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(flag + ": " + e.what());
  }
}

// Counts fit in JSON integers at desk scale; anything larger is written as a string.
json count_json(const Int& x) {
  if (x.fits_slong_p()) return x.get_si();
  return to_string(x);
}

json matrix_json(const IntMatrix& M) {
  json rows = json::array();
  for (std::size_t i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < M.cols(); ++j) row.push_back(to_string(M(i, j)));
    rows.push_back(row);
  }
  return rows;
}

json key_json(const LatticeKey& key) {
  json rows = json::array();
  for (int i = 0; i < key.n; ++i) {
    json row = json::array();
    for (int j = 0; j < key.n; ++j) row.push_back(key.at(i, j).to_string());
    rows.push_back(row);
  }
  json j{{"field", key.d}, {"gram", rows}};
  if (key.orient != 0) j["orientation"] = key.orient;
  return j;
}

json prime_json(const PrimeIdeal& P) {
  return {{"ideal", ideal_to_json(P.P)}, {"p", P.p}, {"e", P.e}, {"f", P.f}, {"norm", P.norm()}};
}

long check_prime(long p) {
  if (p < 2) throw ValidationError("--p must be a prime");
  for (long q = 2; q * q <= p; ++q)
    if (p % q == 0) throw ValidationError("--p must be a prime");
  return p;
}

// q = p^f with p prime.
std::pair<int, int> prime_power(long q) {
  for (long p = 2; p <= q; ++p)
    if (q % p == 0) {
      int f = 0;
      long r = q;
      while (r % p == 0) {
        r /= p;
        ++f;
      }
      if (r != 1) break;
      return {static_cast<int>(p), f};
    }
  throw ValidationError("--q must be a prime power");
}

PrimeIdeal pick_prime(const QuadField& K, long p, std::size_t index) {
  auto ps = K.primes_above(check_prime(p));
  if (index >= ps.size()) throw ValidationError("--prime-index out of range: " + std::to_string(ps.size()) + " primes above p");
  return ps[index];
}

CoefficientOracle load_oracle(const json& j, long d, std::shared_ptr<void>& keep) {
  if (j.is_object() && j.contains("builtin")) {
    std::string name = j["builtin"].get<std::string>();
    if (d != 1) throw ValidationError("/builtin: builtin oracles live over Q");
    if (name == "e8_theta2") {
      auto th = std::make_shared<E8Theta2>(j.value("qmax", 18L));
      keep = th;
      return th->oracle();
    }
    if (name == "sigma") return sigma_oracle(j.value("w", 3L), j.value("mmax", 60L));
    throw ValidationError("/builtin: unknown oracle '" + name + "'");
  }
  auto t = table_oracle_from_json(j);
  if (t.K->d() != d) throw ValidationError("/field: oracle field differs from the lattice field");
  return t.oracle();
}

ClassCharacter load_character(const QuadField& K, const std::string& path) {
  if (path.empty()) return {};
  json j = read_json_file(path);
  if (!j.is_object() || !j.contains("values") || !j["values"].is_array())
    throw ValidationError("/values: expected an array of exact values");
  ClassCharacter chi;
  for (std::size_t i = 0; i < j["values"].size(); ++i) {
    const auto& v = j["values"][i];
    try {
      chi.values.push_back(v.is_string() ? parse_cyclotomic(v.get<std::string>()) : Cyclotomic(Rational(v.get<long>())));
    } catch (const std::exception& e) {
      throw ValidationError("/values/" + std::to_string(i) + ": " + e.what());
    }
  }
  if (!K.is_character(chi)) throw ValidationError("/values: not a character of the class group");
  return chi;
}

json terms_json(const HeckeResult& r) {
  json terms = json::array();
  for (const auto& t : r.terms)
    terms.push_back({{"key", key_json(t.key)},
                     {"r0", t.r0},
                     {"m1", t.m1},
                     {"r2", t.r2},
                     {"E", t.E},
                     {"e", t.e},
                     {"alpha", to_string(t.alpha)},
                     {"oracle_value", t.oracle_value.to_string()},
                     {"contribution", t.contribution.to_string()}});
  return terms;
}

json run_suites(const std::vector<verify::Suite>& suites, bool quick, bool& ok) {
  json out = json::array();
  ok = true;
  for (const auto& s : suites) {
    auto r = s.run(quick);
    std::cerr << (r.pass() ? "PASS " : "FAIL ") << s.name << " (" << r.seconds << "s)\n";
    ok = ok && r.pass();
    out.push_back(r.to_json());
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hecke operators on Fourier coefficients of Hilbert-Siegel modular forms"};
  app.require_subcommand(1);
  std::string out_path;
  app.add_option("--out", out_path, "write JSON here instead of stdout");
  app.fallthrough();

  // field
  long fd = 1, fp = 0;
  std::string fideal;
  auto* field = app.add_subcommand("field", "field data, primes above p, ideal factorisation");
  field->add_option("--d", fd, "squarefree d > 0 (1 means Q)")->required();
  field->add_option("--p", fp, "list the primes above this rational prime");
  field->add_option("--ideal", fideal, "JSON array of generators to factor");

  // classgroup
  long cd = 1;
  auto* classgroup = app.add_subcommand("classgroup", "ideal class group in the wide sense");
  classgroup->add_option("--d", cd, "squarefree d > 0")->required();

  // quadspace
  auto* quadspace = app.add_subcommand("quadspace", "quadratic spaces over finite fields");
  quadspace->require_subcommand(1);
  long qq = 3;
  std::string qgram;
  int ql = 1, qr1 = 1;
  auto* qcount = quadspace->add_subcommand("count", "totally isotropic subspaces: closed form and brute force");
  qcount->add_option("--q", qq)->required();
  qcount->add_option("--gram", qgram, "JSON matrix of integers, reduced into F_q")->required();
  qcount->add_option("--l", ql)->required();
  auto* qwitt = quadspace->add_subcommand("witt", "radical, hyperbolic and anisotropic dimensions");
  qwitt->add_option("--q", qq)->required();
  qwitt->add_option("--gram", qgram)->required();
  auto* qstrat = quadspace->add_subcommand("stratify", "rank stratification check");
  qstrat->add_option("--q", qq)->required();
  qstrat->add_option("--r1", qr1)->required();

  // lattice
  auto* lattice = app.add_subcommand("lattice", "lattice keys and intermediate lattices");
  lattice->require_subcommand(1);
  std::string lfile, lother;
  long lp = 3;
  std::size_t lpi = 0;
  bool linside = false;
  auto* lkey = lattice->add_subcommand("key", "canonical key of Lambda^J");
  lkey->add_option("--lattice", lfile)->required();
  auto* lsub = lattice->add_subcommand("between", "all Omega with P Lambda <= Omega <= P^-1 Lambda");
  lsub->add_option("--lattice", lfile)->required();
  lsub->add_option("--p", lp)->required();
  lsub->add_option("--prime-index", lpi);
  lsub->add_flag("--inside", linside, "restrict to Omega inside Lambda");
  auto* linv = lattice->add_subcommand("invariants", "invariant factors {Lambda:Omega}");
  linv->add_option("--lattice", lfile)->required();
  linv->add_option("--other", lother)->required();

  // hecke
  auto* hecke = app.add_subcommand("hecke", "Hecke action on Fourier coefficients");
  hecke->require_subcommand(1);
  std::string hop = "tp", hchi, hlat, horacle;
  int hj = 1, hk = 4;
  long hp = 3;
  std::size_t hpi = 0;
  auto* happly = hecke->add_subcommand("apply", "Lambda^J-th coefficient of F|T(P) or F|T~_j(P^2)");
  happly->add_option("--op", hop)->check(CLI::IsMember({"tp", "tj"}))->required();
  happly->add_option("--j", hj);
  happly->add_option("--p", hp)->required();
  happly->add_option("--prime-index", hpi);
  happly->add_option("--k", hk)->required();
  happly->add_option("--chi", hchi, "class character file {\"values\": [...]}");
  happly->add_option("--lattice", hlat)->required();
  happly->add_option("--oracle", horacle, "coefficient table or {\"builtin\": ...}")->required();

  // coset
  auto* coset = app.add_subcommand("coset", "coset representatives over Q");
  coset->require_subcommand(1);
  std::string cop = "tp";
  int cn = 1, cj = 1;
  long cp = 3;
  bool cquick = false;
  auto* cgen = coset->add_subcommand("gen", "explicit representatives gamma with delta^-1 gamma");
  cgen->add_option("--op", cop)->check(CLI::IsMember({"tp", "tj"}))->required();
  cgen->add_option("--n", cn)->required();
  cgen->add_option("--p", cp)->required();
  cgen->add_option("--j", cj);
  auto* cver = coset->add_subcommand("verify", "cardinality and inequivalence suites");
  cver->add_flag("--quick", cquick);

  // verify
  auto* verify = app.add_subcommand("verify", "bundled verification suites");
  std::string vwhich = "all";
  bool vquick = false;
  verify->add_option("suite", vwhich, "all or one suite name");
  verify->add_flag("--quick", vquick);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  json out;
  int status = 0;
  try {
    if (*field) {
      QuadField K(fd);
      out["d"] = fd;
      out["degree"] = K.degree();
      out["disc"] = to_string(K.disc());
      out["fundamental_unit"] = K.fundamental_unit().to_string();
      out["different"] = ideal_to_json(K.different());
      if (fp) {
        json ps = json::array();
        for (const auto& P : K.primes_above(check_prime(fp))) ps.push_back(prime_json(P));
        out["primes"] = ps;
      }
      if (!fideal.empty()) {
        json g = parse_json_arg("--ideal", fideal);
        FracIdeal A = ideal_from_json(K, g);
        json fac = json::array();
        for (const auto& [P, e] : K.factor(A)) fac.push_back({{"prime", prime_json(P)}, {"exponent", e}});
        out["ideal"] = {{"basis", ideal_to_json(A)}, {"norm", to_string(K.norm(A))}, {"factorization", fac}};
        if (K.d() != 1 && fd <= 4000) {
          auto gen = K.find_generator(A);
          out["ideal"]["generator"] = gen ? json(gen->to_string()) : json(nullptr);
        }
      }
    } else if (*classgroup) {
      QuadField K(cd);
      const auto& G = K.class_group();
      out["h"] = G.h();
      json reps = json::array();
      for (const auto& A : G.reps) reps.push_back(ideal_to_json(A));
      out["reps"] = reps;
      out["table"] = G.table;
    } else if (*quadspace) {
      auto [p, f] = prime_power(qq);
      if (p == 2) throw ValidationError("--q must be odd");
      auto F = make_fq(p, f);
      if (*qstrat) {
        auto rep = rank_stratify(*F, qr1);
        out = {{"q", qq},
               {"r1", qr1},
               {"stratum_pairs", rep.stratum_pairs},
               {"stratum_matrices", rep.stratum_matrices},
               {"bijective", rep.bijective},
               {"partition", rep.partition},
               {"charsums_checked", rep.charsum_checked},
               {"charsums_equal", rep.charsums_equal}};
        if (!rep.ok()) status = 1;
      } else {
        json g = parse_json_arg("--gram", qgram);
        std::vector<std::vector<long long>> gram;
        try {
          gram = g.get<std::vector<std::vector<long long>>>();
        } catch (const json::exception& e) {
          throw ValidationError(std::string("--gram: expected a matrix of integers: ") + e.what());
        }
        auto V = make_quadspace(F, gram);
        if (*qwitt) {
          auto w = witt_data(V);
          out = {{"q", qq}, {"r", w.r}, {"t", w.t}, {"w", w.w}};
        } else {
          if (ql < 0) throw ValidationError("--l must be non-negative");
          out["l"] = ql;
          out["closed_form"] = count_json(count_isotropic(V, ql));
          if (V.dim > 6) throw BudgetExceeded("brute force counting is limited to dimension 6");
          out["brute_force"] = count_json(count_isotropic_brute(V, ql));
          if (out["closed_form"] != out["brute_force"]) status = 1;
        }
      }
    } else if (*lattice) {
      PseudoLattice L = lattice_from_json(read_json_file(lfile));
      if (*lkey) {
        out["key"] = key_json(canonical_key(L));
        out["even_integral"] = is_even_integral(L);
        out["positive_semidefinite"] = is_positive_semidefinite(L);
      } else if (*lsub) {
        auto P = pick_prime(*L.K, lp, lpi);
        json list = json::array();
        for (const auto& om : enumerate_intermediate(L, P, linside))
          list.push_back({{"lattice", to_json(om.omega)}, {"r0", om.r0}, {"m1", om.m1}, {"r2", om.r2}});
        out = {{"count", list.size()}, {"prime", prime_json(P)}, {"lattices", list}};
      } else {
        PseudoLattice M = lattice_from_json(read_json_file(lother));
        auto f = invariant_factors(L, M);
        json A = json::array();
        for (const auto& a : f.A) A.push_back(ideal_to_json(a));
        out["invariant_factors"] = A;
      }
    } else if (*hecke) {
      PseudoLattice L = lattice_from_json(read_json_file(hlat));
      std::shared_ptr<void> keep;
      CoefficientOracle f = load_oracle(read_json_file(horacle), L.K->d(), keep);
      auto P = pick_prime(*L.K, hp, hpi);
      auto ctx = make_context(L.K, L.n, hk, P, load_character(*L.K, hchi));
      HeckeResult r = hop == "tp" ? apply_tp(ctx, f, L) : apply_tj_tilde(ctx, f, L, hj);
      out["coefficient"] = r.coefficient.to_string();
      out["terms"] = terms_json(r);
      out["operator"] = hop == "tp" ? "T(P)" : "T~_" + std::to_string(hj) + "(P^2)";
      out["prime"] = prime_json(P);
    } else if (*coset) {
      if (*cgen) {
        if (cn < 1 || cn > 3) throw ValidationError("--n must lie in [1, 3]");
        check_prime(cp);
        if (cp == 2) throw ValidationError("--p must be odd");
        auto reps = cop == "tp" ? gen_reps_tp(cn, cp) : gen_reps_tj(cn, cp, cj);
        RatMatrix dinv = cop == "tp" ? delta_inverse_tp(cn, cp) : delta_inverse_tj(cn, cp, cj);
        json list = json::array();
        for (const auto& r : reps) list.push_back(matrix_json(r.gamma));
        json dj = json::array();
        for (std::size_t i = 0; i < dinv.rows(); ++i) {
          json row = json::array();
          for (std::size_t c = 0; c < dinv.cols(); ++c) row.push_back(to_string(dinv(i, c)));
          dj.push_back(row);
        }
        out = {{"count", reps.size()}, {"delta_inverse", dj}, {"representatives", list}};
      } else {
        bool ok = true;
        out["suites"] = run_suites({{"tp-representatives", verify::tp_representatives_suite},
                                    {"coprime-completion", verify::coprime_completion_suite}},
                                   cquick, ok);
        // T_j(p^2): counts against the strata and pairwise inequivalence
        json tj = json::array();
        for (int n : {1, 2})
          for (int j = 1; j <= n; ++j) {
            auto reps = gen_reps_tj(n, 3, j);
            bool good = Int(reps.size()) == structural_count_tj(n, 3, j) &&
                        (cquick && n == 2 && j == 2 ? true : pairwise_inequivalent(reps, delta_inverse_tj(n, 3, j)));
            tj.push_back({{"n", n}, {"j", j}, {"p", 3}, {"count", reps.size()}, {"ok", good}});
            ok = ok && good;
          }
        out["tj"] = tj;
        out["ok"] = ok;
        if (!ok) status = 1;
      }
    } else if (*verify) {
      std::vector<verify::Suite> chosen;
      for (const auto& s : verify::all_suites())
        if (vwhich == "all" || vwhich == s.name) chosen.push_back(s);
      if (chosen.empty()) throw ValidationError("unknown suite '" + vwhich + "'");
      bool ok = true;
      out["suites"] = run_suites(chosen, vquick, ok);
      out["ok"] = ok;
      out["quick"] = vquick;
      if (!ok) status = 1;
    }
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget error: " << e.what() << "\n";
    return 3;
  } catch (const TruncationError& e) {
    std::cerr << "budget error (oracle truncation): " << e.what() << "\n";
    return 3;
  } catch (const std::length_error& e) {
    std::cerr << "budget error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  std::string text = out.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out_path);
    if (!f) {
      std::cerr << "validation error: cannot write " << out_path << "\n";
      return 2;
    }
    f << text;
  }
  return status;
}
