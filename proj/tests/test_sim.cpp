#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "spkg/csv.hpp"
#include "spkg/sim.hpp"

using namespace spkg;
using namespace spkg::testing;
using nlohmann::json;

namespace {

json small_config() {
  return {{"schema_version", 1},
          {"molecule", SPKG_DATA_DIR "/synthetic_molecule.fa"},
          {"footprinting", SPKG_DATA_DIR "/dms_synthetic.csv"},
          {"range", {101, 140}},
          {"library", {{"kind", "uniform"}, {"length", 6}, {"overlap", 2}}},
          {"policies", {"spkg", "explore", "kg_linear"}},
          {"measurements", 6},
          {"batch_size", 2},
          {"noise_ratios", {0.2}},
          {"L", 4},
          {"Q", 20},
          {"trials", 2},
          {"seed", 3}};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("spkg_sim_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("opportunity cost") {
  const Vector v = (Vector(2) << 10, 5).finished();
  auto oc = opportunity_cost(v, 0);
  CHECK(oc.oc == 0.0);
  CHECK(*oc.oc_pct == 0.0);
  oc = opportunity_cost(v, 1);
  CHECK(oc.oc == 5.0);
  CHECK(*oc.oc_pct == 0.5);
  const auto shifted = opportunity_cost((v.array() + 7.0).matrix(), 1);
  CHECK(shifted.oc == 5.0);
  CHECK(*shifted.oc_pct != 0.5);
  CHECK_FALSE(opportunity_cost((Vector(2) << 0, -1).finished(), 1).oc_pct.has_value());
}

TEST_CASE("truth sampling") {
  Rng rng(1);
  TruthSpec spec;
  spec.base_profile = (Vector(5) << 1, 2, 3, 4, 5).finished();
  spec.perturb_ratio = 0.0;
  spec.shift_min = spec.shift_max = 0;
  CHECK(sample_truth(spec, rng) == spec.base_profile);
  spec.shift_min = spec.shift_max = 5;
  CHECK(sample_truth(spec, rng) == spec.base_profile);
  spec.shift_min = spec.shift_max = 1;
  CHECK(sample_truth(spec, rng) == (Vector(5) << 5, 1, 2, 3, 4).finished());

  // Shift amounts are uniform on {20..50}: identify the shift of a one-hot profile.
  TruthSpec hot;
  hot.base_profile = Vector::Zero(100);
  hot.base_profile(0) = 1.0;
  hot.perturb_ratio = 0.0;
  std::vector<int> counts(31, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const Vector t = sample_truth(hot, rng);
    Index at;
    t.maxCoeff(&at);
    REQUIRE(at >= 20);
    REQUIRE(at <= 50);
    ++counts[at - 20];
  }
  double chi2 = 0.0;
  const double expect = draws / 31.0;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(chi2 < 50.892);  // chi-square 0.99 quantile, 30 degrees of freedom

  TruthSpec noisy;
  noisy.base_profile = Vector::Constant(40, 1.0);
  for (int i = 0; i < 20; ++i) CHECK(sample_truth(noisy, rng).minCoeff() >= 0.0);
}

TEST_CASE("simulated observations") {
  Rng rng(2);
  const Vector truth = (Vector(3) << 1, 2, 3).finished();
  const Vector row = (Vector(3) << 1, 0, 2).finished();
  CHECK(simulate_observation(truth, row, 0.0, rng) == 7.0);
  CHECK(simulate_observation(truth, row, 0.0, rng, 1.5) == 8.5);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += simulate_observation(truth, Vector::Zero(3), 2.0, rng);
  CHECK(std::abs(sum / n) < 4.0 * 2.0 / std::sqrt(n));
  Rng a(9), b(9);
  CHECK(simulate_observation(truth, row, 1.0, a) == simulate_observation(truth, row, 1.0, b));
}

TEST_CASE("configuration parsing") {
  const auto c = config_from_json(small_config());
  CHECK(c.policies.size() == 3);
  CHECK(c.effective_w() == 10.0);
  CHECK(c.range->first == 101);
  const auto again = config_from_json(config_to_json(c));
  CHECK(config_to_json(again) == config_to_json(c));

  auto bad = small_config();
  bad["librray"] = 1;
  try {
    config_from_json(bad);
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "librray");
  }
  bad = small_config();
  bad["library"]["lenght"] = 5;
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = small_config();
  bad["trials"] = 0;
  CHECK_THROWS_WITH_AS(config_from_json(bad), "trials: trials must be >= 1", ConfigError);
  bad = small_config();
  bad["policies"] = {"greedy"};
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
}

TEST_CASE("replications have the documented shape") {
  auto doc = small_config();
  doc["policies"] = {"spkg", "explore", "kg_linear", "batch_spkg", "batch_spkg_mutagenesis", "explore_mutagenesis"};
  const auto config = config_from_json(doc);
  const auto setup = prepare_setup(config);
  CHECK(setup.molecule.length() == 40);
  const auto results = run_replications(config, setup);
  REQUIRE(results.size() == 12);
  for (const auto& r : results) {
    const bool batch = is_batch(r.policy);
    const std::size_t epochs = batch ? config.effective_batches() : config.measurements;
    CHECK(r.oc.size() == epochs + 1);
    CHECK(r.decisions.size() == epochs);
    CHECK(r.measurements.back() == (batch ? config.effective_batches() * config.batch_size : config.measurements));
    for (double oc : r.oc) CHECK(oc >= -1e-12);
    for (std::size_t k = 1; k < r.best_true_value.size(); ++k) {
      if (is_mutagenesis(r.policy))
        CHECK(r.best_true_value[k] >= r.best_true_value[k - 1]);
      else
        CHECK(r.best_true_value[k] == r.best_true_value[0]);
    }
  }
  // Same seed, same results.
  const auto again = run_replications(config, setup, 1);
  for (std::size_t i = 0; i < results.size(); ++i) {
    CHECK(results[i].oc == again[i].oc);
    CHECK(results[i].estimation_error == again[i].estimation_error);
  }
  // Paired trials share the truth across policies.
  CHECK(results[0].best_true_value[0] == results[2].best_true_value[0]);
}

TEST_CASE("no measurements leaves the prior state") {
  auto doc = small_config();
  doc["measurements"] = 0;
  doc["trials"] = 1;
  const auto config = config_from_json(doc);
  const auto results = run_replications(config, prepare_setup(config));
  for (const auto& r : results) {
    CHECK(r.oc.size() == 1);
    CHECK(r.measurements == std::vector<int>{0});
  }
}

TEST_CASE("linear KG identifies the truth with negligible noise") {
  // Identity basis: p independent measurements pin every coefficient.
  const int p = 8;
  Rng rng(12);
  const Vector alpha = random_vector(p, rng);
  const BasisMatrix basis{Matrix::Identity(p, p)};
  GaussianBelief g{Vector::Zero(p), random_spd(p, rng)};
  for (int x = 0; x < p; ++x) g = rls_update(g, basis.rows.row(x).transpose(), alpha(x), 1e-9);
  const Vector mu = basis.rows * alpha;
  CHECK(opportunity_cost(mu, argmax_lowest(basis.rows * g.mean)).oc == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("export writes per-step and aggregate tables") {
  const std::string dir = temp_dir("empty");
  auto summary = export_results({}, dir);
  CHECK(summary.rows == 0);
  const auto empty = read_csv(summary.trajectories_path);
  CHECK(empty.records.empty());
  CHECK(read_csv(summary.aggregate_path).records.empty());

  auto doc = small_config();
  doc["measurements"] = 2;
  doc["trials"] = 1;
  doc["policies"] = {"spkg"};
  const auto config = config_from_json(doc);
  const auto one = run_replications(config, prepare_setup(config));
  summary = export_results(one, temp_dir("one"));
  CHECK(read_csv(summary.trajectories_path).records.size() == 3);

  doc["trials"] = 3;
  doc["measurements"] = 3;
  const auto config3 = config_from_json(doc);
  const auto three = run_replications(config3, prepare_setup(config3));
  summary = export_results(three, temp_dir("three"));
  const auto agg = read_csv(summary.aggregate_path);
  const int step_col = agg.column("step"), oc_col = agg.column("oc_mean");
  for (const auto& row : agg.records) {
    const int step = std::stoi(row.fields[step_col]);
    const double hand = (three[0].oc[step] + three[1].oc[step] + three[2].oc[step]) / 3.0;
    CHECK(std::stod(row.fields[oc_col]) == doctest::Approx(hand).epsilon(1e-14));
  }
  CHECK(summary.summary.at("replications") == 3);

  // Byte-identical on rerun.
  const auto rerun = export_results(run_replications(config3, prepare_setup(config3)), temp_dir("three_again"));
  CHECK(read_file(rerun.trajectories_path) == read_file(summary.trajectories_path));
}
