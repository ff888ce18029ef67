#include "spkg/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <omp.h>

#include "spkg/json_io.hpp"
#include "spkg/kg.hpp"

namespace spkg {

using nlohmann::json;

Vector sample_truth(const TruthSpec& spec, Rng& rng) {
  const Index p = spec.base_profile.size();
  if (p < 1) throw ValidationError("truth.base_profile", "base profile is empty");
  if (!(spec.perturb_ratio >= 0.0)) throw ValidationError("truth.perturb_ratio", "perturb ratio must be >= 0");
  if (spec.shift_min < 0 || spec.shift_max < spec.shift_min)
    throw ValidationError("truth.shift", "shift range must satisfy 0 <= min <= max");

  std::normal_distribution<double> normal(0.0, 1.0);
  double kappa;
  do {
    kappa = spec.kappa_mean + spec.kappa_sd * normal(rng);
  } while (!(kappa > 0.01));

  Vector draw = spec.base_profile;
  if (spec.perturb_ratio > 0.0) {
    const Matrix cov = build_prior_covariance(spec.base_profile, spec.perturb_ratio, kappa);
    // Covariance can be rank deficient (zero profile); a pivoted LDLT handles that.
    Eigen::LDLT<Matrix> ldlt(cov);
    Vector z(p);
    for (Index i = 0; i < p; ++i) z(i) = normal(rng);
    const Vector d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
    const Vector y = ldlt.matrixL() * d.cwiseProduct(z);
    const Vector x = ldlt.transpositionsP().transpose() * y;
    draw += x;
  }

  std::uniform_int_distribution<int> shift_dist(spec.shift_min, spec.shift_max);
  const int shift = static_cast<int>(shift_dist(rng) % p);
  Vector out(p);
  for (Index i = 0; i < p; ++i) out((i + shift) % p) = std::max(draw(i), 0.0);
  return out;
}

double simulate_observation(const Vector& truth, const Vector& basis_row, double noise_sd, Rng& rng, double intercept) {
  require_dims(truth.size() == basis_row.size(), "simulate_observation: row length differs from p");
  if (!(noise_sd >= 0.0)) throw ValidationError("noise_sd", "noise_sd must be >= 0");
  std::normal_distribution<double> normal(0.0, 1.0);
  return basis_row.dot(truth) + intercept + noise_sd * normal(rng);
}

OpportunityCost opportunity_cost(const Vector& truth_values, int believed_best) {
  if (truth_values.size() == 0) throw ValidationError("library", "library is empty");
  if (believed_best < 0 || believed_best >= truth_values.size())
    throw DimensionError("opportunity_cost: believed best out of range");
  const double best = truth_values.maxCoeff();
  OpportunityCost out;
  out.oc = best - truth_values(believed_best);
  if (best != 0.0) out.oc_pct = out.oc / best;
  return out;
}

namespace {

const std::map<std::string, Policy>& policy_names() {
  static const std::map<std::string, Policy> names{{"explore", Policy::explore},
                                                   {"kg_linear", Policy::kg_linear},
                                                   {"spkg", Policy::spkg},
                                                   {"batch_spkg", Policy::batch_spkg},
                                                   {"batch_spkg_mutagenesis", Policy::batch_spkg_mutagenesis},
                                                   {"explore_mutagenesis", Policy::explore_mutagenesis}};
  return names;
}

}  // namespace

std::string to_string(Policy policy) {
  for (const auto& [name, p] : policy_names())
    if (p == policy) return name;
  return "unknown";
}

Policy policy_from_string(const std::string& name) {
  const auto it = policy_names().find(name);
  if (it == policy_names().end()) throw ValidationError("policies", "unknown policy '" + name + "'");
  return it->second;
}

bool is_batch(Policy policy) {
  return policy == Policy::batch_spkg || policy == Policy::batch_spkg_mutagenesis ||
         policy == Policy::explore_mutagenesis;
}

bool is_mutagenesis(Policy policy) {
  return policy == Policy::batch_spkg_mutagenesis || policy == Policy::explore_mutagenesis;
}

// ---------------------------------------------------------------- config

namespace {

class Reader {
 public:
  Reader(const json& doc, std::string prefix) : doc_(doc), prefix_(std::move(prefix)) {
    if (!doc_.is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "expected an object");
  }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return doc_.contains(key);
  }
  const json& at(const std::string& key) { return (seen_.insert(key), doc_.at(key)); }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = doc_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key), "has the wrong type");
    }
  }

  void reject_unknown() const {
    for (const auto& [k, v] : doc_.items())
      if (!seen_.count(k)) throw ConfigError(path(k), "unknown field");
  }

 private:
  const json& doc_;
  std::string prefix_;
  std::set<std::string> seen_;
};

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

}  // namespace

ExperimentConfig config_from_json(const json& doc, const std::string& base_dir) {
  ExperimentConfig c;
  Reader r(doc, "");
  r.get("schema_version", c.schema_version);
  if (c.schema_version != 1) throw ConfigError("schema_version", "unsupported schema version");
  r.get("molecule", c.molecule);
  r.get("footprinting", c.footprinting);
  r.get("energy_table", c.energy_table);
  r.get("basis", c.basis);
  if (c.molecule.empty()) throw ConfigError("molecule", "a molecule FASTA path is required");
  if (c.footprinting.empty()) throw ConfigError("footprinting", "a footprinting CSV path is required");
  c.molecule = resolve(base_dir, c.molecule);
  c.footprinting = resolve(base_dir, c.footprinting);
  c.energy_table = resolve(base_dir, c.energy_table);
  c.basis = resolve(base_dir, c.basis);
  if (r.has("range")) {
    std::vector<int> range;
    r.get("range", range);
    if (range.size() != 2 || range[0] < 1 || range[1] < range[0])
      throw ConfigError("range", "expected [first, last] with 1 <= first <= last");
    c.range = std::pair{range[0], range[1]};
  }
  if (r.has("library")) {
    Reader lib(r.at("library"), "library");
    lib.get("kind", c.library.kind);
    lib.get("length", c.library.length);
    lib.get("overlap", c.library.overlap);
    lib.get("first", c.library.first);
    lib.get("last", c.library.last);
    lib.get("path", c.library.path);
    lib.reject_unknown();
    if (c.library.kind != "uniform" && c.library.kind != "curated" && c.library.kind != "file")
      throw ConfigError("library.kind", "expected uniform, curated or file");
    if (c.library.kind == "file" && c.library.path.empty()) throw ConfigError("library.path", "required for kind=file");
    c.library.path = resolve(base_dir, c.library.path);
  }
  if (r.has("policies")) {
    std::vector<std::string> names;
    r.get("policies", names);
    if (names.empty()) throw ConfigError("policies", "at least one policy is required");
    c.policies.clear();
    for (const auto& n : names) {
      try {
        c.policies.push_back(policy_from_string(n));
      } catch (const ValidationError& e) {
        throw ConfigError("policies", e.what());
      }
    }
  }
  r.get("measurements", c.measurements);
  r.get("batch_size", c.batch_size);
  r.get("batches", c.batches);
  r.get("noise_ratios", c.noise_ratios);
  r.get("L", c.L);
  r.get("Q", c.Q);
  r.get("prior_mode", c.prior_mode);
  if (r.has("w")) {
    double w = 0.0;
    r.get("w", w);
    c.w = w;
  }
  if (r.has("prior")) {
    Reader pr(r.at("prior"), "prior");
    pr.get("r", c.prior_r);
    pr.get("kappa", c.prior_kappa);
    pr.reject_unknown();
  }
  if (c.prior_mode == "good") c.truth.shift_min = c.truth.shift_max = 0;
  if (r.has("truth")) {
    Reader tr(r.at("truth"), "truth");
    tr.get("perturb_ratio", c.truth.perturb_ratio);
    tr.get("kappa_mean", c.truth.kappa_mean);
    tr.get("kappa_sd", c.truth.kappa_sd);
    if (tr.has("shift")) {
      std::vector<int> shift;
      tr.get("shift", shift);
      if (shift.size() != 2 || shift[0] < 0 || shift[1] < shift[0])
        throw ConfigError("truth.shift", "expected [min, max] with 0 <= min <= max");
      c.truth.shift_min = shift[0];
      c.truth.shift_max = shift[1];
    }
    tr.reject_unknown();
  }
  r.get("lambda_scale", c.lambda_scale);
  r.get("trials", c.trials);
  r.get("seed", c.seed);
  r.get("record_scores", c.record_scores);
  r.reject_unknown();

  if (c.measurements < 0) throw ConfigError("measurements", "must be >= 0");
  if (c.batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (c.batches < -1) throw ConfigError("batches", "must be >= 0");
  if (c.noise_ratios.empty()) throw ConfigError("noise_ratios", "at least one noise ratio is required");
  for (double v : c.noise_ratios)
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("noise_ratios", "noise ratios must be positive");
  if (c.L < 1) throw ConfigError("L", "must be >= 1");
  if (c.Q < 2) throw ConfigError("Q", "must be >= 2");
  if (c.prior_mode != "good" && c.prior_mode != "bad") throw ConfigError("prior_mode", "expected good or bad");
  if (c.w && !(*c.w >= 0.0)) throw ConfigError("w", "must be >= 0");
  if (!(c.prior_r > 0.0)) throw ConfigError("prior.r", "must be > 0");
  if (!(c.prior_kappa > 0.0)) throw ConfigError("prior.kappa", "must be > 0");
  if (!(c.truth.perturb_ratio >= 0.0)) throw ConfigError("truth.perturb_ratio", "must be >= 0");
  if (!(c.truth.kappa_sd >= 0.0)) throw ConfigError("truth.kappa_sd", "must be >= 0");
  if (!(c.lambda_scale >= 0.0)) throw ConfigError("lambda_scale", "must be >= 0");
  if (c.trials < 1) throw ConfigError("trials", "trials must be >= 1");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  json doc;
  try {
    doc = read_json_file(path);
  } catch (const ValidationError& e) {
    throw ConfigError("<json>", e.what());
  }
  return config_from_json(doc, std::filesystem::path(path).parent_path().string());
}

json config_to_json(const ExperimentConfig& c) {
  json policies = json::array();
  for (auto p : c.policies) policies.push_back(to_string(p));
  json doc{{"schema_version", c.schema_version},
           {"molecule", c.molecule},
           {"footprinting", c.footprinting},
           {"library",
            {{"kind", c.library.kind},
             {"length", c.library.length},
             {"overlap", c.library.overlap},
             {"first", c.library.first},
             {"last", c.library.last}}},
           {"policies", policies},
           {"measurements", c.measurements},
           {"batch_size", c.batch_size},
           {"batches", c.batches},
           {"noise_ratios", c.noise_ratios},
           {"L", c.L},
           {"Q", c.Q},
           {"prior_mode", c.prior_mode},
           {"w", c.effective_w()},
           {"prior", {{"r", c.prior_r}, {"kappa", c.prior_kappa}}},
           {"truth",
            {{"perturb_ratio", c.truth.perturb_ratio},
             {"kappa_mean", c.truth.kappa_mean},
             {"kappa_sd", c.truth.kappa_sd},
             {"shift", {c.truth.shift_min, c.truth.shift_max}}}},
           {"lambda_scale", c.lambda_scale},
           {"trials", c.trials},
           {"seed", c.seed},
           {"record_scores", c.record_scores}};
  if (!c.energy_table.empty()) doc["energy_table"] = c.energy_table;
  if (!c.basis.empty()) doc["basis"] = c.basis;
  if (!c.library.path.empty()) doc["library"]["path"] = c.library.path;
  if (c.range) doc["range"] = {c.range->first, c.range->second};
  return doc;
}

Setup prepare_setup(const ExperimentConfig& config) {
  Setup s;
  TargetMolecule full = read_fasta(config.molecule);
  Vector profile = load_footprinting(config.footprinting).profile.values;
  if (config.range) {
    const auto [first, last] = *config.range;
    if (last > full.length()) throw ConfigError("range", "range extends past the molecule");
    s.molecule = full.slice(first, last);
    if (profile.size() == full.length()) profile = profile.segment(first - 1, last - first + 1).eval();
  } else {
    s.molecule = std::move(full);
  }
  const int p = s.molecule.length();
  if (profile.size() != p)
    throw ConfigError("footprinting", "profile has " + std::to_string(profile.size()) + " sites, expected " +
                                          std::to_string(p));
  s.profile = {profile, config.footprinting};
  s.energy = config.energy_table.empty() ? default_energy_table() : load_energy_table(config.energy_table);

  const auto& lib = config.library;
  try {
    if (lib.kind == "uniform")
      s.library = generate_uniform_library(p, lib.length, lib.overlap, lib.first, lib.last);
    else if (lib.kind == "curated")
      s.library = generate_curated_library(p, lib.first, lib.last < 0 ? p : lib.last);
    else {
      s.library = read_probe_csv(lib.path);
      for (const auto& probe : s.library) validate_probe(probe, p);
      normalize_library(s.library);
    }
  } catch (const ValidationError& e) {
    throw ConfigError("library", e.what());
  }
  const int M = static_cast<int>(s.library.size());
  s.basis = std::make_shared<const BasisMatrix>(config.basis.empty() ? build_basis(s.molecule, s.library, s.energy)
                                                                     : load_basis_override(config.basis, M, p));
  s.prior = build_prior(s.profile, config.prior_r, config.prior_kappa, config.effective_w());
  s.prior_pattern.resize(p);
  for (int j = 0; j < p; ++j) s.prior_pattern[j] = profile(j) != 0.0;
  return s;
}

// ---------------------------------------------------------------- policies

namespace {

struct TrialState {
  std::vector<Probe> library;
  LearnerState learner;       // every policy except kg_linear
  GaussianBelief linear;      // kg_linear
  Vector alpha;               // truth
  Vector mu;                  // truth over the current library
  double noise_sd = 0.0;
};

const BasisMatrix& current_basis(const TrialState& t) { return *t.learner.belief.basis; }

void record(const TrialState& t, Policy policy, int measured, ReplicationResult& out) {
  const GaussianBelief& g = policy == Policy::kg_linear ? t.linear : t.learner.belief.gaussian;
  const BasisMatrix& basis = current_basis(t);
  // Sparse learners report E[alpha] under the pattern mixture; the linear
  // learner has no sparsity part.
  const Vector est = policy == Policy::kg_linear ? g.mean : mixture_mean(g.mean, t.learner.patterns);
  const Vector theta = basis.rows * est + basis.intercepts;
  const int believed = argmax_lowest(theta);
  const auto oc = opportunity_cost(t.mu, believed);
  out.measurements.push_back(measured);
  out.oc.push_back(std::max(oc.oc, 0.0));
  out.oc_pct.push_back(oc.oc_pct ? std::max(*oc.oc_pct, 0.0) : std::numeric_limits<double>::quiet_NaN());
  out.estimation_error.push_back((est - t.alpha).norm() / static_cast<double>(t.alpha.size()));
  out.best_true_value.push_back(t.mu.maxCoeff());
  out.believed_true_value.push_back(t.mu(believed));
}

void refresh_truth(TrialState& t) {
  const BasisMatrix& basis = current_basis(t);
  t.mu = basis.rows * t.alpha + basis.intercepts;
}

}  // namespace

ReplicationResult run_trial(const ExperimentConfig& config, const Setup& setup, Policy policy, double noise_ratio,
                            int trial) {
  Rng truth_rng = make_rng(config.seed, static_cast<std::uint64_t>(trial), 0);
  Rng noise_rng = make_rng(config.seed, static_cast<std::uint64_t>(trial), 1);
  Rng policy_rng = make_rng(config.seed, static_cast<std::uint64_t>(trial), 2);
  std::normal_distribution<double> normal(0.0, 1.0);

  ReplicationResult out;
  out.policy = policy;
  out.noise_ratio = noise_ratio;
  out.trial = trial;
  out.seed = derive_seed(config.seed, static_cast<std::uint64_t>(trial), 0);

  TrialState t;
  TruthSpec truth = config.truth;
  truth.base_profile = setup.profile.values;
  t.alpha = sample_truth(truth, truth_rng);
  t.library = setup.library;
  const Vector mu0 = setup.basis->rows * t.alpha + setup.basis->intercepts;
  t.noise_sd = noise_ratio * (mu0.maxCoeff() - mu0.minCoeff());
  if (!(t.noise_sd > 0.0)) t.noise_sd = noise_ratio * std::max(1.0, mu0.cwiseAbs().maxCoeff());
  out.noise_sd = t.noise_sd;

  const LearnerConfig lc{config.L, config.lambda_scale};
  BeliefState prior = BeliefState::make(setup.prior.gaussian, setup.prior.sparsity, setup.basis,
                                        Vector::Constant(1, t.noise_sd));
  t.linear = prior.gaussian;
  t.learner = make_learner(std::move(prior), setup.prior_pattern, lc, policy_rng);
  refresh_truth(t);

  int measured = 0;
  record(t, policy, measured, out);

  const int epochs = is_batch(policy) ? config.effective_batches() : config.measurements;
  const int B = is_batch(policy) ? config.batch_size : 1;
  for (int e = 0; e < epochs; ++e) {
    std::vector<int> picks;
    switch (policy) {
      case Policy::explore:
        picks = exploration_select(static_cast<int>(t.library.size()), 1, policy_rng).alternatives;
        break;
      case Policy::kg_linear:
        picks = {kg_linear(t.linear, current_basis(t), t.learner.belief.noise_sd).argmax};
        break;
      case Policy::spkg:
        picks = {spkg_scores(t.learner.belief, t.learner.patterns).argmax};
        break;
      case Policy::batch_spkg:
      case Policy::batch_spkg_mutagenesis: {
        if (policy == Policy::batch_spkg_mutagenesis) {
          auto ex = expand_library(t.library, t.learner.belief, t.learner.patterns, setup.molecule, setup.energy);
          t.library = std::move(ex.library);
          t.learner.belief = std::move(ex.belief);
          refresh_truth(t);
        }
        if (config.record_scores) out.score_sweeps.push_back(spkg_scores(t.learner.belief, t.learner.patterns).scores);
        picks = batch_spkg_select(t.learner.belief, t.learner.patterns, B, config.Q, policy_rng).alternatives;
        break;
      }
      case Policy::explore_mutagenesis: {
        const auto candidates = mutagenesis_candidates(t.library, setup.molecule.length());
        std::uniform_int_distribution<int> pick(0, static_cast<int>(candidates.size()) - 1);
        const int c = pick(policy_rng);
        int chosen = c;
        if (c >= static_cast<int>(t.library.size())) {
          std::vector<Probe> grown = t.library;
          grown.push_back(candidates[c]);
          t.learner.belief = extend_belief(t.learner.belief, t.library, grown, setup.molecule, setup.energy);
          t.library = std::move(grown);
          chosen = static_cast<int>(t.library.size()) - 1;
          refresh_truth(t);
        }
        picks = {chosen};
        if (B > 1) {
          const auto rest = exploration_select(static_cast<int>(t.library.size()), B - 1, policy_rng).alternatives;
          picks.insert(picks.end(), rest.begin(), rest.end());
        }
        break;
      }
    }

    std::vector<Observation> batch;
    std::vector<Probe> decided;
    std::vector<double> values;
    for (int x : picks) {
      const double y = t.mu(x) + t.noise_sd * normal(noise_rng);
      batch.push_back({x, y, t.noise_sd});
      decided.push_back(t.library[x]);
      values.push_back(y);
    }
    if (policy == Policy::kg_linear) {
      const BasisMatrix& basis = current_basis(t);
      for (const auto& obs : batch)
        t.linear = rls_update(t.linear, basis.rows.row(obs.alternative).transpose(),
                              obs.value - basis.intercepts(obs.alternative), obs.noise_sd);
    } else {
      learner_observe(t.learner, batch, lc, policy_rng);
    }
    measured += static_cast<int>(picks.size());
    out.decisions.push_back(std::move(decided));
    out.observations.push_back(std::move(values));
    record(t, policy, measured, out);
  }
  if (config.record_scores && policy == Policy::batch_spkg)
    out.score_sweeps.push_back(spkg_scores(t.learner.belief, t.learner.patterns).scores);
  out.library_size = static_cast<int>(t.library.size());
  out.homotopy_fallbacks = t.learner.fallbacks;
  return out;
}

std::vector<ReplicationResult> run_replications(const ExperimentConfig& config, const Setup& setup, int jobs) {
  struct Job {
    Policy policy;
    double ratio;
    int trial;
  };
  std::vector<Job> work;
  for (auto policy : config.policies)
    for (double ratio : config.noise_ratios)
      for (int trial = 0; trial < config.trials; ++trial) work.push_back({policy, ratio, trial});

  std::vector<ReplicationResult> results(work.size());
  std::vector<std::exception_ptr> errors(work.size());
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::size_t i = 0; i < work.size(); ++i) {
    try {
      results[i] = run_trial(config, setup, work[i].policy, work[i].ratio, work[i].trial);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

// ---------------------------------------------------------------- export

namespace {

std::string g17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Stat {
  int n = 0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();
};

Stat stat_of(const std::vector<double>& xs) {
  Stat s;
  std::vector<double> v;
  for (double x : xs)
    if (!std::isnan(x)) v.push_back(x);
  s.n = static_cast<int>(v.size());
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / s.n;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = s.n > 1 ? std::sqrt(ss / (s.n - 1)) : 0.0;
  return s;
}

std::string join_probes(const std::vector<Probe>& probes) {
  std::string s;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(probes[i].start) + "-" + std::to_string(probes[i].end);
  }
  return s;
}

std::string join_values(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ';';
    s += g17(values[i]);
  }
  return s;
}

// Groups in first-appearance order.
std::vector<std::vector<const ReplicationResult*>> group_results(const std::vector<ReplicationResult>& results) {
  std::vector<std::vector<const ReplicationResult*>> groups;
  std::vector<std::pair<Policy, double>> keys;
  for (const auto& r : results) {
    const auto key = std::pair{r.policy, r.noise_ratio};
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      groups.emplace_back();
      it = keys.end() - 1;
    }
    groups[it - keys.begin()].push_back(&r);
  }
  return groups;
}

}  // namespace

json summarize(const std::vector<ReplicationResult>& results) {
  json oc = json::object();
  for (const auto& group : group_results(results)) {
    std::vector<double> finals;
    for (const auto* r : group) finals.push_back(r->oc_pct.back());
    const Stat s = stat_of(finals);
    const std::string policy = to_string(group.front()->policy);
    const std::string ratio = format_double(group.front()->noise_ratio);
    oc[policy][ratio] = std::isnan(s.mean) ? json(nullptr) : json(s.mean);
  }
  return {{"mean_final_oc_pct", oc}, {"replications", results.size()}};
}

ExportSummary export_results(const std::vector<ReplicationResult>& results, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  ExportSummary summary;
  summary.trajectories_path = (std::filesystem::path(out_dir) / "trajectories.csv").string();
  summary.aggregate_path = (std::filesystem::path(out_dir) / "aggregate.csv").string();

  std::ofstream traj(summary.trajectories_path, std::ios::binary | std::ios::trunc);
  if (!traj) throw std::runtime_error("cannot write " + summary.trajectories_path);
  traj << "policy,noise_ratio,trial,seed,noise_sd,step,measurements,oc,oc_pct,estimation_error,best_true_value,"
          "believed_true_value,decisions,observations\n";
  for (const auto& r : results) {
    for (std::size_t k = 0; k < r.oc.size(); ++k) {
      traj << to_string(r.policy) << ',' << g17(r.noise_ratio) << ',' << r.trial << ',' << r.seed << ','
           << g17(r.noise_sd) << ',' << k << ',' << r.measurements[k] << ',' << g17(r.oc[k]) << ','
           << g17(r.oc_pct[k]) << ',' << g17(r.estimation_error[k]) << ',' << g17(r.best_true_value[k]) << ','
           << g17(r.believed_true_value[k]) << ',' << (k ? join_probes(r.decisions[k - 1]) : "") << ','
           << (k ? join_values(r.observations[k - 1]) : "") << '\n';
      ++summary.rows;
    }
  }
  if (!traj) throw std::runtime_error("write failed for " + summary.trajectories_path);

  std::ofstream agg(summary.aggregate_path, std::ios::binary | std::ios::trunc);
  if (!agg) throw std::runtime_error("cannot write " + summary.aggregate_path);
  agg << "policy,noise_ratio,step,measurements,n,oc_mean,oc_sd,oc_pct_n,oc_pct_mean,oc_pct_sd,estimation_error_mean,"
         "estimation_error_sd,best_true_value_mean,best_true_value_sd,believed_true_value_mean,believed_true_value_sd\n";
  for (const auto& group : group_results(results)) {
    std::size_t steps = 0;
    for (const auto* r : group) steps = std::max(steps, r->oc.size());
    for (std::size_t k = 0; k < steps; ++k) {
      std::vector<double> oc, pct, err, best, believed;
      int measured = 0;
      for (const auto* r : group) {
        if (k >= r->oc.size()) continue;
        oc.push_back(r->oc[k]);
        pct.push_back(r->oc_pct[k]);
        err.push_back(r->estimation_error[k]);
        best.push_back(r->best_true_value[k]);
        believed.push_back(r->believed_true_value[k]);
        measured = r->measurements[k];
      }
      const Stat a = stat_of(oc), b = stat_of(pct), c = stat_of(err), d = stat_of(best), e = stat_of(believed);
      agg << to_string(group.front()->policy) << ',' << g17(group.front()->noise_ratio) << ',' << k << ',' << measured
          << ',' << a.n << ',' << g17(a.mean) << ',' << g17(a.sd) << ',' << b.n << ',' << g17(b.mean) << ','
          << g17(b.sd) << ',' << g17(c.mean) << ',' << g17(c.sd) << ',' << g17(d.mean) << ',' << g17(d.sd) << ','
          << g17(e.mean) << ',' << g17(e.sd) << '\n';
    }
  }
  if (!agg) throw std::runtime_error("write failed for " + summary.aggregate_path);
  summary.summary = summarize(results);
  return summary;
}

}  // namespace spkg
