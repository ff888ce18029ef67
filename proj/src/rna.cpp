#include "spkg/rna.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "spkg/csv.hpp"

namespace spkg {

namespace {

constexpr char kBases[] = {'A', 'C', 'G', 'U'};

const std::vector<Probe>& expert_probes() {
  static const std::vector<Probe> probes{{98, 112, {}}, {113, 126, {}}, {127, 140, {}}, {141, 155, {}}, {156, 170, {}},
                                         {171, 179, {}}, {179, 194, {}}, {195, 214, {}}, {215, 233, {}}, {234, 251, {}}};
  return probes;
}

void append_windows(std::vector<Probe>& out, int length, int step, int first, int last) {
  for (int s = first; s + length - 1 <= last; s += step) out.push_back({s, s + length - 1, {}});
}

}  // namespace

TargetMolecule TargetMolecule::make(std::string name, std::string sequence, bool* t_converted) {
  bool converted = false;
  for (char& c : sequence) {
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (c == 'T') {
      c = 'U';
      converted = true;
    }
    if (c != 'A' && c != 'C' && c != 'G' && c != 'U')
      throw ValidationError("sequence", std::string("invalid nucleotide '") + c + "'");
  }
  if (sequence.size() < static_cast<std::size_t>(kMinProbeLength))
    throw ValidationError("sequence", "molecule must have at least 4 nucleotides");
  if (t_converted) *t_converted = converted;
  return {std::move(name), std::move(sequence)};
}

TargetMolecule TargetMolecule::slice(int first, int last) const {
  if (first < 1 || last > length() || last - first + 1 < kMinProbeLength)
    throw ValidationError("range", "usable range must lie inside the molecule and span at least 4 sites");
  return make(name, sequence.substr(first - 1, last - first + 1));
}

void validate_probe(const Probe& probe, int p) {
  if (probe.start < 1 || probe.end > p || probe.start > probe.end)
    throw ValidationError("probe", "probe [" + std::to_string(probe.start) + "," + std::to_string(probe.end) +
                                       "] is outside 1.." + std::to_string(p));
  if (probe.length() < kMinProbeLength)
    throw ValidationError("probe", "probe [" + std::to_string(probe.start) + "," + std::to_string(probe.end) +
                                       "] is shorter than 4");
}

int base_index(char nucleotide) {
  switch (nucleotide) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'U': return 3;
    default: throw ValidationError("sequence", std::string("invalid nucleotide '") + nucleotide + "'");
  }
}

EnergyTable default_energy_table() {
  // Xia et al. (1998) Watson-Crick nearest-neighbor stacks, kcal/mol, indexed by 5'->3' dinucleotide.
  //            A      C      G      U       (second)
  return {-0.93, -2.24, -2.08, -1.10,   // A
          -2.11, -3.26, -2.36, -2.08,   // C
          -2.35, -3.42, -3.26, -2.24,   // G
          -1.33, -2.35, -2.11, -0.93};  // U
}

EnergyTable load_energy_table(const std::string& path) {
  const auto rows = read_csv(path);
  EnergyTable table{};
  std::array<bool, 16> seen{};
  for (const auto& row : rows.records) {
    if (row.fields.size() != 2) throw CsvError(path, row.line, "expected pair,energy");
    const std::string& pair = row.fields[0];
    if (pair.size() != 2) throw CsvError(path, row.line, "pair must be two nucleotides");
    std::string upper = pair;
    for (char& c : upper) {
      c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (c == 'T') c = 'U';
    }
    int k;
    try {
      k = 4 * base_index(upper[0]) + base_index(upper[1]);
    } catch (const ValidationError&) {
      throw CsvError(path, row.line, "invalid nucleotide in pair '" + pair + "'");
    }
    table[k] = parse_double(row.fields[1], path, row.line);
    seen[k] = true;
  }
  for (int k = 0; k < 16; ++k)
    if (!seen[k])
      throw ValidationError("energy_table", std::string("energy table lacks pair ") + kBases[k / 4] + kBases[k % 4]);
  return table;
}

Vector basis_row(const TargetMolecule& molecule, const Probe& probe, const EnergyTable& table) {
  validate_probe(probe, molecule.length());
  Vector row = Vector::Zero(molecule.length());
  for (int k = probe.start; k < probe.end; ++k) {
    const int a = base_index(molecule.sequence[k - 1]);
    const int b = base_index(molecule.sequence[k]);
    row(k - 1) = std::abs(table[4 * a + b]);
  }
  return row;
}

BasisMatrix build_basis(const TargetMolecule& molecule, const std::vector<Probe>& probes, const EnergyTable& table) {
  Matrix rows(static_cast<Index>(probes.size()), molecule.length());
  for (std::size_t m = 0; m < probes.size(); ++m)
    rows.row(static_cast<Index>(m)) = basis_row(molecule, probes[m], table).transpose();
  return BasisMatrix(std::move(rows));
}

BasisMatrix load_basis_override(const std::string& path, int expected_rows, int expected_features) {
  auto csv = read_csv(path, /*header=*/false);
  auto numeric = [](const std::string& f) {
    try {
      parse_double(f, "", 0);
      return true;
    } catch (const CsvError&) {
      return false;
    }
  };
  if (!csv.records.empty() && !numeric(csv.records.front().fields.front())) csv.records.erase(csv.records.begin());
  std::vector<std::vector<double>> values;
  for (const auto& row : csv.records) {
    std::vector<double> parsed;
    for (const auto& f : row.fields) parsed.push_back(parse_double(f, path, row.line));
    values.push_back(std::move(parsed));
  }
  if (static_cast<int>(values.size()) != expected_rows)
    throw ValidationError("basis", "basis override has " + std::to_string(values.size()) + " rows, expected " +
                                       std::to_string(expected_rows));
  Matrix rows(expected_rows, expected_features);
  Vector intercepts(expected_rows);
  for (int m = 0; m < expected_rows; ++m) {
    if (static_cast<int>(values[m].size()) != expected_features + 1)
      throw ValidationError("basis", "basis override row " + std::to_string(m + 1) + " needs " +
                                         std::to_string(expected_features + 1) + " columns");
    for (int j = 0; j < expected_features; ++j) rows(m, j) = values[m][j];
    intercepts(m) = values[m][expected_features];
  }
  if (!rows.allFinite() || !intercepts.allFinite()) throw ValidationError("basis", "basis override has non-finite entries");
  return BasisMatrix(std::move(rows), std::move(intercepts));
}

void normalize_library(std::vector<Probe>& probes) {
  std::sort(probes.begin(), probes.end(), [](const Probe& a, const Probe& b) { return a.key() < b.key(); });
  probes.erase(std::unique(probes.begin(), probes.end()), probes.end());
  for (auto& p : probes)
    if (p.name.empty()) p.name = "p" + std::to_string(p.start) + "_" + std::to_string(p.end);
}

std::vector<Probe> generate_uniform_library(int p, int length, int overlap, int first, int last) {
  if (last < 0) last = p;
  if (length < kMinProbeLength) throw ValidationError("library.length", "probe length must be at least 4");
  if (overlap < 0 || overlap >= length) throw ValidationError("library.overlap", "overlap must be in [0, length)");
  if (first < 1 || last > p || first > last) throw ValidationError("library.range", "range outside the molecule");
  std::vector<Probe> out;
  append_windows(out, length, length - overlap, first, last);
  if (out.empty()) throw ValidationError("library", "library specification produces no probes");
  normalize_library(out);
  return out;
}

std::vector<Probe> generate_curated_library(int p, int first, int last) {
  if (first < 1 || last > p || first > last) throw ValidationError("library.range", "range outside the molecule");
  std::vector<Probe> out;
  append_windows(out, 8, 4, first, last);
  append_windows(out, 12, 6, first, last);
  append_windows(out, 16, 8, first, last);
  for (const auto& e : expert_probes())
    if (e.start >= first && e.end <= last) out.push_back(e);
  if (out.empty()) throw ValidationError("library", "library specification produces no probes");
  normalize_library(out);
  return out;
}

std::vector<Probe> mutagenesis_neighbors(const Probe& probe, int p) {
  validate_probe(probe, p);
  std::vector<Probe> out;
  auto consider = [&](int i, int j) {
    if (i < 1 || j > p || j - i + 1 < kMinProbeLength) return;
    out.push_back({i, j, {}});
  };
  for (int k = -kMaxMutation; k <= kMaxMutation; ++k) {
    if (k == 0) continue;
    consider(probe.start + k, probe.end);
    consider(probe.start, probe.end + k);
  }
  std::sort(out.begin(), out.end(), [](const Probe& a, const Probe& b) { return a.key() < b.key(); });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

BeliefState extend_belief(const BeliefState& belief, const std::vector<Probe>& known, const std::vector<Probe>& probes,
                          const TargetMolecule& molecule, const EnergyTable& table) {
  require_dims(static_cast<int>(known.size()) == belief.alternatives(), "extend_belief: library and basis disagree");
  std::map<std::pair<int, int>, int> index;
  for (std::size_t m = 0; m < known.size(); ++m) index.emplace(known[m].key(), static_cast<int>(m));
  const int p = belief.features();
  Matrix rows(static_cast<Index>(probes.size()), p);
  Vector intercepts(static_cast<Index>(probes.size()));
  Vector noise(static_cast<Index>(probes.size()));
  for (std::size_t m = 0; m < probes.size(); ++m) {
    const auto it = index.find(probes[m].key());
    if (it != index.end()) {
      rows.row(m) = belief.basis->rows.row(it->second);
      intercepts(m) = belief.basis->intercepts(it->second);
      noise(m) = belief.noise_sd(it->second);
    } else {
      rows.row(m) = basis_row(molecule, probes[m], table).transpose();
      intercepts(m) = 0.0;
      noise(m) = belief.noise_sd(0);
    }
  }
  BeliefState out = belief;
  out.basis = std::make_shared<const BasisMatrix>(std::move(rows), std::move(intercepts));
  out.noise_sd = std::move(noise);
  return out;
}

std::vector<Probe> mutagenesis_candidates(const std::vector<Probe>& library, int p) {
  std::set<std::pair<int, int>> present;
  for (const auto& probe : library) present.insert(probe.key());
  std::set<std::pair<int, int>> fresh;
  for (const auto& probe : library)
    for (const auto& n : mutagenesis_neighbors(probe, p))
      if (!present.count(n.key())) fresh.insert(n.key());
  std::vector<Probe> out = library;
  for (const auto& [s, e] : fresh) out.push_back({s, e, "p" + std::to_string(s) + "_" + std::to_string(e)});
  return out;
}

Expansion expand_library(const std::vector<Probe>& library, const BeliefState& belief,
                         const std::vector<SparsityPattern>& patterns, const TargetMolecule& molecule,
                         const EnergyTable& table, const LibraryScorer& scorer) {
  if (library.empty()) throw ValidationError("library", "library must not be empty");
  Expansion out;
  out.candidates = mutagenesis_candidates(library, molecule.length());

  const BeliefState scored = extend_belief(belief, library, out.candidates, molecule, table);
  const KGScores s = scorer(scored, patterns);
  require_dims(s.scores.size() == static_cast<Index>(out.candidates.size()), "expand_library: scorer output length");
  out.scores = s.scores;
  out.chosen = out.candidates[s.argmax];
  out.library = library;
  if (s.argmax < static_cast<int>(library.size())) {
    out.chosen_index = s.argmax;
    out.belief = belief;
  } else {
    out.added = true;
    out.library.push_back(out.chosen);
    out.chosen_index = static_cast<int>(out.library.size()) - 1;
    out.belief = extend_belief(belief, library, out.library, molecule, table);
  }
  return out;
}

TargetMolecule parse_fasta(std::istream& in, bool* t_converted) {
  std::string line, name, seq;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == ';') continue;
    if (line[0] == '>') {
      if (header_seen) break;  // first record only
      header_seen = true;
      name = line.substr(1);
      continue;
    }
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) seq.push_back(c);
  }
  if (seq.empty()) throw ValidationError("molecule", "no sequence found in FASTA input");
  return TargetMolecule::make(name, seq, t_converted);
}

TargetMolecule read_fasta(const std::string& path, bool* t_converted) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open molecule file " + path);
  return parse_fasta(in, t_converted);
}

std::vector<Probe> read_probe_csv(const std::string& path) {
  const auto csv = read_csv(path);
  const int name_col = csv.column("name"), start_col = csv.column("start"), end_col = csv.column("end");
  std::vector<Probe> out;
  for (const auto& row : csv.records) {
    Probe p;
    p.name = row.at(name_col, path);
    p.start = parse_int(row.at(start_col, path), path, row.line);
    p.end = parse_int(row.at(end_col, path), path, row.line);
    out.push_back(std::move(p));
  }
  return out;
}

void write_probe_csv(const std::string& path, const std::vector<Probe>& probes) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "name,start,end\n";
  for (const auto& p : probes) out << p.name << ',' << p.start << ',' << p.end << '\n';
}

}  // namespace spkg
