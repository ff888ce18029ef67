#pragma once

// Target molecules, probes, the energetic basis matrix and probe-library
// construction, including the length-mutagenesis neighborhood.

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "spkg/belief.hpp"
#include "spkg/kg.hpp"

namespace spkg {

struct TargetMolecule {
  std::string name;
  std::string sequence;  // A, C, G, U only

  int length() const { return static_cast<int>(sequence.size()); }

  /// Upper-cases, maps T to U (setting `t_converted`) and validates the alphabet and length >= 4.
  static TargetMolecule make(std::string name, std::string sequence, bool* t_converted = nullptr);
  /// Contiguous 1-based inclusive subrange as a molecule of its own.
  TargetMolecule slice(int first, int last) const;
};

/// 1-based inclusive region [start, end].
struct Probe {
  int start = 1;
  int end = 1;
  std::string name;

  int length() const { return end - start + 1; }
  auto key() const { return std::pair{start, end}; }
  friend bool operator==(const Probe& a, const Probe& b) { return a.start == b.start && a.end == b.end; }
};

constexpr int kMinProbeLength = 4;
constexpr int kMaxMutation = 7;

/// Throws ValidationError unless 1 <= start <= end <= p and length >= 4.
void validate_probe(const Probe& probe, int p);

/// Dinucleotide stacking energies in kcal/mol, indexed 4 * first + second over A, C, G, U.
using EnergyTable = std::array<double, 16>;

int base_index(char nucleotide);
EnergyTable default_energy_table();
/// CSV with header `pair,energy` and all 16 ordered pairs.
EnergyTable load_energy_table(const std::string& path);

/// phi_k = |E(t_k t_{k+1})| for start <= k < end, zero elsewhere (including k = end).
Vector basis_row(const TargetMolecule& molecule, const Probe& probe, const EnergyTable& table);
BasisMatrix build_basis(const TargetMolecule& molecule, const std::vector<Probe>& probes, const EnergyTable& table);
/// M x (p + 1) CSV: p coefficient columns followed by the intercept. A header row is skipped if non-numeric.
BasisMatrix load_basis_override(const std::string& path, int expected_rows, int expected_features);

/// Windows of `length` advancing by length - overlap across [first, last] (defaults: whole molecule).
std::vector<Probe> generate_uniform_library(int p, int length, int overlap, int first = 1, int last = -1);
/// 8/12/16-long windows shifted by 4/6/8 over [first, last] plus the ten expert probes that fit.
std::vector<Probe> generate_curated_library(int p, int first = 95, int last = 251);
/// Sorts by (start, end), drops duplicates and names unnamed probes by position.
void normalize_library(std::vector<Probe>& probes);

/// All [i+k, j] and [i, j+k] with 0 < |k| <= 7 inside [1, p] and of length >= 4.
std::vector<Probe> mutagenesis_neighbors(const Probe& probe, int p);

/// The library followed by every new mutagenesis neighbor of its probes, in (start, end) order.
std::vector<Probe> mutagenesis_candidates(const std::vector<Probe>& library, int p);

using LibraryScorer = std::function<KGScores(const BeliefState&, const std::vector<SparsityPattern>&)>;

struct Expansion {
  std::vector<Probe> library;  // input library, plus the chosen probe if it was new
  Probe chosen;
  int chosen_index = 0;   // position of `chosen` in `library`
  bool added = false;
  std::vector<Probe> candidates;  // library followed by new neighbors in (start, end) order
  Vector scores;                  // over `candidates`
  /// Belief over `library` (basis extended by the chosen row when added).
  BeliefState belief;
};

/// Belief whose basis covers `probes`: rows of `belief` are reused for probes
/// at the same positions of `known`; new rows are built from the energy table
/// with zero intercept and the noise of the first alternative.
BeliefState extend_belief(const BeliefState& belief, const std::vector<Probe>& known, const std::vector<Probe>& probes,
                          const TargetMolecule& molecule, const EnergyTable& table);

/// Scores the library together with the mutagenesis neighbors of every probe
/// and returns the argmax (lowest index on ties).
Expansion expand_library(const std::vector<Probe>& library, const BeliefState& belief,
                         const std::vector<SparsityPattern>& patterns, const TargetMolecule& molecule,
                         const EnergyTable& table, const LibraryScorer& scorer = spkg_scores);

TargetMolecule read_fasta(const std::string& path, bool* t_converted = nullptr);
TargetMolecule parse_fasta(std::istream& in, bool* t_converted = nullptr);
std::vector<Probe> read_probe_csv(const std::string& path);
void write_probe_csv(const std::string& path, const std::vector<Probe>& probes);

}  // namespace spkg
