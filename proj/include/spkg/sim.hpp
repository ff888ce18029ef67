#pragma once

// Simulation study: truth sampling, noisy observations, policy loops,
// opportunity-cost and estimation-error tracking, replication and export.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spkg/belief.hpp"
#include "spkg/learner.hpp"
#include "spkg/prior.hpp"
#include "spkg/rna.hpp"

namespace spkg {

struct TruthSpec {
  Vector base_profile;
  double perturb_ratio = 10.0;
  double kappa_mean = kDefaultKappa;
  double kappa_sd = 0.1;
  int shift_min = 20;
  int shift_max = 50;
};

/// kappa ~ N(mean, sd^2) truncated to > 0.01; Gaussian draw around the base
/// profile with covariance build_prior_covariance(base, perturb_ratio, kappa);
/// right circular shift by Uniform{shift_min..shift_max}; negatives clamped to 0.
Vector sample_truth(const TruthSpec& spec, Rng& rng);

/// phi^T truth + intercept + N(0, noise_sd^2).
double simulate_observation(const Vector& truth, const Vector& basis_row, double noise_sd, Rng& rng,
                            double intercept = 0.0);

struct OpportunityCost {
  double oc = 0.0;
  std::optional<double> oc_pct;  // absent when the true optimum is zero
};

OpportunityCost opportunity_cost(const Vector& truth_values, int believed_best);

enum class Policy { explore, kg_linear, spkg, batch_spkg, batch_spkg_mutagenesis, explore_mutagenesis };

std::string to_string(Policy policy);
Policy policy_from_string(const std::string& name);
bool is_batch(Policy policy);
bool is_mutagenesis(Policy policy);

struct LibrarySpec {
  std::string kind = "uniform";  // uniform | curated | file
  int length = 10;
  int overlap = 3;
  int first = 1;   // within the usable range
  int last = -1;   // -1: end of the usable range
  std::string path;
};

struct ExperimentConfig {
  int schema_version = 1;
  std::string molecule;     // FASTA path
  std::string footprinting; // CSV path
  std::string energy_table; // optional CSV path
  std::string basis;        // optional override CSV path
  std::optional<std::pair<int, int>> range;  // usable 1-based range of the molecule
  LibrarySpec library;
  std::vector<Policy> policies{Policy::spkg};
  int measurements = 40;    // sequential policies
  int batch_size = 3;       // B
  int batches = -1;         // batch policies; -1: ceil(measurements / B)
  std::vector<double> noise_ratios{0.1};
  int L = 20;
  int Q = 200;
  std::string prior_mode = "bad";  // bad: shifted truth, w = 10; good: unshifted truth, w = 20
  std::optional<double> w;
  double prior_r = kDefaultNoiseRatio;
  double prior_kappa = kDefaultKappa;
  TruthSpec truth;          // base_profile filled from the footprinting file
  double lambda_scale = 0.5;
  int trials = 1;
  std::uint64_t seed = 1;
  bool record_scores = false;

  double effective_w() const { return w ? *w : (prior_mode == "good" ? 20.0 : 10.0); }
  int effective_batches() const { return batches >= 0 ? batches : (measurements + batch_size - 1) / batch_size; }
};

/// Error in an experiment configuration; `field` is a JSON path such as "library.length".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Relative paths are resolved against `base_dir`.
ExperimentConfig config_from_json(const nlohmann::json& doc, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Immutable inputs shared by every replication.
struct Setup {
  TargetMolecule molecule;
  FootprintingProfile profile;
  EnergyTable energy;
  std::vector<Probe> library;
  std::shared_ptr<const BasisMatrix> basis;
  PriorBundle prior;
  std::vector<bool> prior_pattern;
};

Setup prepare_setup(const ExperimentConfig& config);

struct ReplicationResult {
  Policy policy = Policy::spkg;
  double noise_ratio = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double noise_sd = 0.0;
  std::vector<std::vector<Probe>> decisions;      // per epoch (one probe, or B for batch policies)
  std::vector<std::vector<double>> observations;  // aligned with decisions
  // Trajectories have one entry per epoch plus the prior state at index 0.
  std::vector<int> measurements;
  std::vector<double> oc;
  std::vector<double> oc_pct;  // NaN when the true optimum is zero
  std::vector<double> estimation_error;
  std::vector<double> best_true_value;
  std::vector<double> believed_true_value;
  std::vector<Vector> score_sweeps;  // first-pick SpKG scores before each batch (record_scores)
  int library_size = 0;
  int homotopy_fallbacks = 0;
};

/// One trial of one policy at one noise ratio.
ReplicationResult run_trial(const ExperimentConfig& config, const Setup& setup, Policy policy, double noise_ratio,
                            int trial);

/// Every (policy, noise ratio, trial) combination, in that nesting order. Jobs
/// run in parallel; results depend only on (config, setup).
std::vector<ReplicationResult> run_replications(const ExperimentConfig& config, const Setup& setup, int jobs = 0);

struct ExportSummary {
  std::string trajectories_path;
  std::string aggregate_path;
  std::size_t rows = 0;
  nlohmann::json summary;  // mean final OC% per policy and noise ratio
};

ExportSummary export_results(const std::vector<ReplicationResult>& results, const std::string& out_dir);

/// Mean final OC% keyed by policy then noise ratio.
nlohmann::json summarize(const std::vector<ReplicationResult>& results);

}  // namespace spkg
