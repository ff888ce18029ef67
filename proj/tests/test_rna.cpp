#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "spkg/rna.hpp"

using namespace spkg;
using namespace spkg::testing;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("spkg_test_" + name)).string();
}

TargetMolecule random_molecule(int p, Rng& rng) {
  std::uniform_int_distribution<int> d(0, 3);
  std::string s;
  for (int i = 0; i < p; ++i) s.push_back("ACGU"[d(rng)]);
  return TargetMolecule::make("r", s);
}

// Straight enumeration of the one-end length changes.
std::set<std::pair<int, int>> brute_neighbors(int i, int j, int p) {
  std::set<std::pair<int, int>> out;
  for (int k = -kMaxMutation; k <= kMaxMutation; ++k) {
    if (k == 0) continue;
    for (auto [a, b] : {std::pair{i + k, j}, std::pair{i, j + k}})
      if (a >= 1 && b <= p && b - a + 1 >= kMinProbeLength) out.insert({a, b});
  }
  return out;
}

}  // namespace

TEST_CASE("molecule normalization and validation") {
  bool converted = false;
  const auto m = TargetMolecule::make("x", "acgTt", &converted);
  CHECK(m.sequence == "ACGUU");
  CHECK(converted);
  CHECK_THROWS_AS(TargetMolecule::make("x", "ACGN"), ValidationError);
  CHECK_THROWS_AS(TargetMolecule::make("x", "ACG"), ValidationError);
  CHECK(m.slice(2, 5).sequence == "CGUU");
  CHECK_THROWS(m.slice(3, 5));

  std::istringstream fasta(">first record\nACGU\nacgu\n>second\nGGGG\n");
  const auto f = parse_fasta(fasta);
  CHECK(f.name == "first record");
  CHECK(f.sequence == "ACGUACGU");
}

TEST_CASE("probe validation") {
  CHECK_NOTHROW(validate_probe({1, 4, {}}, 10));
  CHECK_THROWS_AS(validate_probe({1, 3, {}}, 10), ValidationError);
  CHECK_THROWS_AS(validate_probe({0, 5, {}}, 10), ValidationError);
  CHECK_THROWS_AS(validate_probe({7, 11, {}}, 10), ValidationError);
  CHECK_THROWS_AS(validate_probe({8, 5, {}}, 10), ValidationError);
}

TEST_CASE("basis rows follow the stacking convention") {
  Rng rng(2);
  const auto mol = random_molecule(20, rng);
  const auto table = default_energy_table();
  const Vector row = basis_row(mol, {5, 8, {}}, table);
  for (int k = 1; k <= 20; ++k) {
    if (k >= 5 && k <= 7)
      CHECK(row(k - 1) > 0.0);
    else
      CHECK(row(k - 1) == 0.0);
  }
  EnergyTable zero{};
  CHECK(build_basis(mol, {{1, 6, {}}, {3, 12, {}}}, zero).rows.isZero());

  const auto poly = TargetMolecule::make("a", std::string(30, 'A'));
  for (int len : {4, 9, 17})
    CHECK(basis_row(poly, {3, 2 + len, {}}, table).sum() ==
          doctest::Approx((len - 1) * std::abs(table[0])).epsilon(1e-14));
}

TEST_CASE("energy table and probe files round-trip") {
  const std::string path = temp_path("energy.csv");
  {
    std::ofstream out(path);
    out << "pair,energy\n";
    const auto t = default_energy_table();
    for (int k = 0; k < 16; ++k) out << "ACGU"[k / 4] << "ACGT"[k % 4] << ',' << t[k] << '\n';
  }
  CHECK(load_energy_table(path) == default_energy_table());
  {
    std::ofstream out(path);
    out << "pair,energy\nAA,-1\n";
  }
  CHECK_THROWS_AS(load_energy_table(path), ValidationError);

  const std::string probes = temp_path("probes.csv");
  const std::vector<Probe> lib{{1, 10, "a"}, {5, 20, "b"}};
  write_probe_csv(probes, lib);
  const auto back = read_probe_csv(probes);
  REQUIRE(back.size() == 2);
  CHECK(back[1] == lib[1]);
  CHECK(back[1].name == "b");
  std::filesystem::remove(path);
  std::filesystem::remove(probes);
}

TEST_CASE("library generators") {
  CHECK(generate_uniform_library(393, 10, 3).size() == 55);
  CHECK(generate_uniform_library(12, 12, 11).size() == 1);
  const auto batch = generate_curated_library(393, 95, 251);
  CHECK(batch.size() == 91);
  int expert = 0;
  for (const auto& probe : batch)
    for (auto key : {std::pair{98, 112}, std::pair{113, 126}, std::pair{127, 140}, std::pair{141, 155},
                     std::pair{156, 170}, std::pair{171, 179}, std::pair{179, 194}, std::pair{195, 214},
                     std::pair{215, 233}, std::pair{234, 251}})
      expert += probe.key() == key;
  CHECK(expert == 10);
  CHECK_THROWS_AS(generate_uniform_library(20, 3, 1), ValidationError);
}

TEST_CASE("mutagenesis neighborhoods") {
  CHECK(mutagenesis_neighbors({10, 20, {}}, 400).size() == 28);
  CHECK(mutagenesis_neighbors({1, 4, {}}, 400).size() == 7);
  const auto tiny = mutagenesis_neighbors({1, 4, {}}, 5);
  REQUIRE(tiny.size() == 1);
  CHECK(tiny[0].key() == std::pair{1, 5});

  Rng rng(3);
  std::uniform_int_distribution<int> d(1, 60);
  for (int rep = 0; rep < 200; ++rep) {
    int a = d(rng), b = d(rng);
    if (a > b) std::swap(a, b);
    if (b - a + 1 < kMinProbeLength) continue;
    std::set<std::pair<int, int>> got;
    for (const auto& n : mutagenesis_neighbors({a, b, {}}, 60)) got.insert(n.key());
    CHECK(got == brute_neighbors(a, b, 60));
  }

  const std::vector<Probe> lib{{3, 8, "x"}, {5, 11, "y"}};
  const auto cand = mutagenesis_candidates(lib, 12);
  CHECK(cand[0] == lib[0]);
  CHECK(cand[1] == lib[1]);
  std::set<std::pair<int, int>> seen;
  for (const auto& c : cand) CHECK(seen.insert(c.key()).second);
}

TEST_CASE("expand_library matches brute-force scoring of the expanded set") {
  Rng rng(17);
  const int p = 12;
  const auto mol = random_molecule(p, rng);
  const auto table = default_energy_table();
  const std::vector<Probe> lib{{2, 7, "a"}, {6, 11, "b"}};
  for (int rep = 0; rep < 10; ++rep) {
    auto basis = std::make_shared<const BasisMatrix>(build_basis(mol, lib, table));
    Vector xi(p), eta(p);
    std::uniform_real_distribution<double> u(0.5, 4.0);
    for (int j = 0; j < p; ++j) {
      xi(j) = u(rng);
      eta(j) = u(rng);
    }
    const auto belief = BeliefState::make({random_vector(p, rng), random_spd(p, rng)}, {xi, eta}, basis,
                                          Vector::Constant(1, 0.7));
    const auto patterns = enumerate_patterns(belief.sparsity, 4, rng);
    const auto ex = expand_library(lib, belief, patterns, mol, table);

    // Independent scoring: explicit candidate set, explicit rows, quadrature h per pattern.
    std::set<std::pair<int, int>> keys;
    for (const auto& probe : lib)
      for (auto k : brute_neighbors(probe.start, probe.end, p)) keys.insert(k);
    std::vector<std::pair<int, int>> cands{lib[0].key(), lib[1].key()};
    for (auto k : keys)
      if (k != lib[0].key() && k != lib[1].key()) cands.push_back(k);
    Matrix rows = Matrix::Zero(static_cast<Index>(cands.size()), p);
    for (std::size_t m = 0; m < cands.size(); ++m)
      for (int k = cands[m].first; k < cands[m].second; ++k)
        rows(m, k - 1) = std::abs(table[4 * base_index(mol.sequence[k - 1]) + base_index(mol.sequence[k])]);
    Vector brute = Vector::Zero(static_cast<Index>(cands.size()));
    for (const auto& pat : patterns) {
      Matrix masked = rows;
      Vector mean = belief.gaussian.mean;
      for (int j = 0; j < p; ++j)
        if (!pat.mask[j]) {
          masked.col(j).setZero();
          mean(j) = 0.0;
        }
      const Matrix cov = masked * belief.gaussian.covariance * masked.transpose();
      const Vector a = masked * mean;
      for (Index x = 0; x < brute.size(); ++x) {
        const double denom = std::sqrt(0.49 + cov(x, x));
        brute(x) += pat.weight * h_quadrature(a, cov.col(x) / denom);
      }
    }
    REQUIRE(ex.scores.size() == brute.size());
    CHECK((ex.scores - brute).cwiseAbs().maxCoeff() < 1e-6);
    Index best;
    brute.maxCoeff(&best);
    CHECK(ex.scores(best) == doctest::Approx(ex.scores.maxCoeff()).epsilon(1e-9));
    CHECK(ex.chosen.key() == cands[ex.scores.size() ? argmax_lowest(ex.scores) : 0]);
    CHECK(ex.library.size() == lib.size() + (ex.added ? 1 : 0));
    CHECK(ex.library[ex.chosen_index] == ex.chosen);
    CHECK(ex.belief.alternatives() == static_cast<int>(ex.library.size()));
  }
}

TEST_CASE("expand_library on a zero-variance belief follows the tie rule") {
  Rng rng(5);
  const auto mol = random_molecule(16, rng);
  const std::vector<Probe> lib{{4, 9, "only"}};
  auto basis = std::make_shared<const BasisMatrix>(build_basis(mol, lib, default_energy_table()));
  const auto belief = BeliefState::make({random_vector(16, rng), Matrix::Zero(16, 16)}, SparsityBelief::uniform(16),
                                        basis, Vector::Ones(1));
  const auto patterns = enumerate_patterns(belief.sparsity, 3, rng);
  const auto ex = expand_library(lib, belief, patterns, mol, default_energy_table());
  CHECK(ex.scores.isZero());
  CHECK(ex.chosen == lib[0]);
  CHECK_FALSE(ex.added);
  CHECK(ex.library.size() == 1);

  // When the argmax is already in the library nothing is added.
  const auto again = expand_library(ex.library, ex.belief, patterns, mol, default_energy_table());
  CHECK(again.library.size() == ex.library.size());
}
