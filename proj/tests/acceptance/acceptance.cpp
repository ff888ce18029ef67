// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            run everything
//   acceptance --only X   run one criterion (exit 1 if it fails)
//   acceptance --list     print the criterion names

#include <CLI11.hpp>

#include <sys/wait.h>

#include <boost/math/distributions/students_t.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "spkg/kg.hpp"
#include "spkg/lasso.hpp"
#include "spkg/learner.hpp"
#include "spkg/prior.hpp"
#include "spkg/rna.hpp"
#include "spkg/sim.hpp"

namespace fs = std::filesystem;
using namespace spkg;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

Matrix random_matrix(Index r, Index c, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

Vector random_vector(Index n, Rng& rng) { return random_matrix(n, 1, rng).col(0); }

Matrix random_spd(Index n, Rng& rng) {
  const Matrix a = random_matrix(n, n, rng);
  return symmetrized(a * a.transpose() / static_cast<double>(n) + 0.1 * Matrix::Identity(n, n));
}

double rel_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

struct PairedTest {
  double mean_diff = 0.0;
  double t = 0.0;
  double p = 1.0;  // one-sided, H1: mean(a - b) > 0
};

PairedTest paired_greater(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  double mean = 0.0;
  for (double x : d) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  PairedTest r;
  r.mean_diff = mean;
  if (sd == 0.0) {
    r.p = mean > 0.0 ? 0.0 : 1.0;
    return r;
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  r.p = boost::math::cdf(boost::math::complement(dist, r.t));
  return r;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// ---------------------------------------------------------------- oracles

Outcome h_oracle() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  std::uniform_int_distribution<int> size(2, 6);
  std::normal_distribution<double> n(0.0, 1.0);
  const int instances = 100, samples = 1000000;
  int within = 0;
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const int M = size(rng);
    Vector a(M), b(M);
    for (int i = 0; i < M; ++i) {
      a(i) = n(rng);
      b(i) = n(rng);
    }
    const double exact = h_function(a, b);
    const double top = a.maxCoeff();
    double sum = 0.0, sq = 0.0;
    for (int s = 0; s < samples; ++s) {
      const double v = (a + b * n(rng)).maxCoeff() - top;
      sum += v;
      sq += v * v;
    }
    const double mc = sum / samples;
    const double se = std::sqrt((sq / samples - mc * mc) / (samples - 1));
    const double z = se > 0.0 ? std::abs(exact - mc) / se : (exact == mc ? 0.0 : INFINITY);
    worst = std::max(worst, z);
    within += z <= 3.0;
  }
  const double secs = seconds_since(t0);
  return {within == instances && secs < 60.0, std::to_string(within) + "/" + std::to_string(instances) +
                                                  " within 3 SE (worst " + fmt(worst) + " SE), " + fmt(secs, 3) + " s"};
}

Outcome reductions() {
  Rng rng(31);
  double worst_lin = 0.0, worst_sparse = 0.0;
  int argmax_agree = 0;
  const int cases = 100;
  for (int rep = 0; rep < cases; ++rep) {
    const int p = 3 + rep % 8;
    const Vector mean = random_vector(p, rng);
    const Matrix cov = random_spd(p, rng);
    const Vector sd = Vector::Constant(p, 0.2 + 0.01 * rep);

    const BasisMatrix identity{Matrix::Identity(p, p)};
    worst_lin = std::max(worst_lin,
                         (kg_linear({mean, cov}, identity, sd).scores - kg_lookup(mean, cov, sd).scores).lpNorm<Eigen::Infinity>());

    auto basis = std::make_shared<const BasisMatrix>(random_matrix(p + 5, p, rng).cwiseAbs());
    const auto state = BeliefState::make({mean, cov}, SparsityBelief::uniform(p), basis, Vector::Constant(1, 0.5));
    const std::vector<SparsityPattern> all_true{{std::vector<bool>(p, true), 1.0}};
    worst_sparse = std::max(worst_sparse, (spkg_scores(state, all_true).scores -
                                           kg_linear(state.gaussian, *basis, state.noise_sd).scores)
                                              .lpNorm<Eigen::Infinity>());

    const auto patterns = enumerate_patterns(state.sparsity, 5, rng);
    argmax_agree +=
        batch_spkg_select(state, patterns, 1, 50, rng).alternatives.front() == spkg_scores(state, patterns).argmax;
  }
  const bool pass = worst_lin <= 1e-12 && worst_sparse <= 1e-12 && argmax_agree == cases;
  return {pass, "identity basis " + fmt(worst_lin) + ", all-true pattern " + fmt(worst_sparse) + ", B=1 argmax " +
                    std::to_string(argmax_agree) + "/" + std::to_string(cases)};
}

Outcome sequential_batch() {
  Rng rng(47);
  double worst = 0.0;
  const int cases = 200;
  for (int rep = 0; rep < cases; ++rep) {
    const int p = 2 + rep % 9, n = 1 + rep % 12;
    const Vector mean = random_vector(p, rng);
    const Matrix cov = random_spd(p, rng);
    const Matrix rows = random_matrix(n, p, rng);
    const Vector y = random_vector(n, rng);
    std::vector<double> sd(n);
    for (int i = 0; i < n; ++i) sd[i] = 0.3 + 0.2 * ((i * 7 + rep) % 5);

    GaussianBelief seq{mean, cov};
    for (int i = 0; i < n; ++i) seq = rls_update(seq, rows.row(i).transpose(), y(i), sd[i]);

    // Information form: (Sigma^-1 + X^T R^-1 X)^-1 and the matching mean.
    Vector w(n);
    for (int i = 0; i < n; ++i) w(i) = 1.0 / (sd[i] * sd[i]);
    const Matrix prior_prec = cov.inverse();
    const Matrix post_cov = (prior_prec + rows.transpose() * w.asDiagonal() * rows).inverse();
    const Vector post_mean = post_cov * (prior_prec * mean + rows.transpose() * w.asDiagonal() * y);
    const auto batch = batch_rls_update({mean, cov}, rows, std::span<const double>(y.data(), n), sd);
    worst = std::max({worst, rel_diff(seq.covariance, post_cov), rel_diff(seq.mean, post_mean),
                      rel_diff(batch.covariance, post_cov), rel_diff(batch.mean, post_mean)});
  }
  return {worst <= 1e-8, std::to_string(cases) + " cases, worst relative difference " + fmt(worst)};
}

Outcome lasso_homotopy() {
  Rng rng(53);
  std::uniform_int_distribution<int> pdist(2, 20), ndist(1, 30);
  double worst = 0.0, worst_kkt = 0.0;
  int states = 0, fallbacks = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int p = pdist(rng), n = ndist(rng);
    const Matrix x = random_matrix(n, p, rng);
    Vector truth = Vector::Zero(p);
    for (int j = 0; j < p; j += 3) truth(j) = 2.0 * (j % 2 ? -1.0 : 1.0);
    const Vector y = x * truth + 0.5 * random_vector(n, rng);
    LassoState state = LassoState::empty(p, lambda_schedule(0, p, 0.5));
    for (int i = 0; i < n; ++i) {
      const double lam = lambda_schedule(i + 1, p, 0.5) + 0.05;
      state = homotopy_update(state, x.row(i).transpose(), y(i), lam);
      const auto ref = lasso_solve(x.topRows(i + 1), y.head(i + 1), lam);
      worst = std::max(worst, (state.estimate - ref.estimate).lpNorm<Eigen::Infinity>());
      worst_kkt = std::max(worst_kkt, kkt_violation(state) / std::max(1.0, lam));
      fallbacks += state.fallback;
      ++states;
    }
  }
  return {worst <= 1e-6 && worst_kkt <= 1e-6,
          std::to_string(states) + " states, max |homotopy - solve| " + fmt(worst) + ", max KKT violation " +
              fmt(worst_kkt) + ", " + std::to_string(fallbacks) + " fallbacks"};
}

Outcome prior_builder() {
  double worst_exact = 0.0;
  for (double k : {0.05, 0.2, 0.39728, 0.8, 1.7}) {
    Vector acf(101);
    for (int lag = 0; lag <= 100; ++lag) acf(lag) = std::exp(-k * lag);
    worst_exact = std::max(worst_exact, std::abs(fit_decay_to_autocorr(acf) - k));
  }
  double sum = 0.0;
  for (int s = 0; s < 100; ++s) {
    Rng rng(5000 + s);
    std::normal_distribution<double> noise(0.0, 0.05);
    Vector acf(101);
    for (int lag = 0; lag <= 100; ++lag) acf(lag) = std::exp(-kDefaultKappa * lag) * (lag ? 1.0 + noise(rng) : 1.0);
    sum += fit_decay_to_autocorr(acf);
  }
  const double rel = std::abs(sum / 100 - kDefaultKappa) / kDefaultKappa;

  Rng rng(61);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  double min_eig = INFINITY;
  for (int rep = 0; rep < 100; ++rep) {
    const int p = 5 + rep % 60;
    Vector prof(p);
    for (int i = 0; i < p; ++i) prof(i) = u(rng) < 0.3 ? 0.0 : u(rng);
    min_eig = std::min(min_eig, min_eigenvalue(build_prior_covariance(prof, 0.2, 0.05 + u(rng))));
  }
  return {worst_exact <= 1e-6 && rel <= 0.10 && min_eig >= -1e-10,
          "noiseless error " + fmt(worst_exact) + ", 5% noise mean relative error " + fmt(rel) +
              ", min eigenvalue over 100 profiles " + fmt(min_eig)};
}

Outcome psd_stress() {
  Rng rng(71);
  double worst = INFINITY;
  const int sequences = 1000, ops = 20;
  std::uniform_int_distribution<int> op(0, 4);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto molecule = TargetMolecule{"stress", "GGACUUCGGUCCAGUACGAUCGGAUCCGAUAGCCGAUACG"};
  const auto table = default_energy_table();
  const int p = molecule.length();
  for (int s = 0; s < sequences; ++s) {
    std::vector<Probe> library = generate_uniform_library(p, 8, 3);
    auto basis = std::make_shared<const BasisMatrix>(build_basis(molecule, library, table));
    Vector prof = (random_vector(p, rng).array().abs() + 0.1).matrix();
    BeliefState belief = BeliefState::make({prof, build_prior_covariance(prof, 0.2, 0.4)}, SparsityBelief::uniform(p),
                                           basis, Vector::Constant(1, 0.3));
    LearnerConfig lc{4, 0.5};
    LearnerState learner = make_learner(belief, {}, lc, rng);
    for (int k = 0; k < ops; ++k) {
      const int M = learner.belief.alternatives();
      std::uniform_int_distribution<int> pick(0, M - 1);
      switch (op(rng)) {
        case 0: {  // single rls step
          const int x = pick(rng);
          learner.belief.gaussian = rls_update(learner.belief.gaussian, learner.belief.basis->rows.row(x).transpose(),
                                               3.0 * n(rng), 0.3);
          break;
        }
        case 1: {  // batch rls step
          const int B = 3;
          Matrix rows(B, p);
          std::vector<double> ys(B), sds(B, 0.3);
          for (int b = 0; b < B; ++b) {
            rows.row(b) = learner.belief.basis->rows.row(pick(rng));
            ys[b] = 3.0 * n(rng);
          }
          learner.belief.gaussian = batch_rls_update(learner.belief.gaussian, rows, ys, sds);
          break;
        }
        case 2: {  // Lasso step with fusion
          const std::vector<Observation> obs{{pick(rng), 3.0 * n(rng), 0.3}};
          learner_observe(learner, obs, lc, rng);
          break;
        }
        case 3: {  // library growth
          const auto candidates = mutagenesis_candidates(library, p);
          std::uniform_int_distribution<int> c(static_cast<int>(library.size()), static_cast<int>(candidates.size()) - 1);
          if (candidates.size() > library.size()) {
            std::vector<Probe> grown = library;
            grown.push_back(candidates[c(rng)]);
            learner.belief = extend_belief(learner.belief, library, grown, molecule, table);
            library = std::move(grown);
          }
          break;
        }
        default: {  // lookup-table update on the projected belief
          auto alt = project_to_alternatives(learner.belief);
          alt = lookup_update(alt.mean, alt.covariance, {pick(rng), 3.0 * n(rng), 0.3});
          worst = std::min(worst, min_eigenvalue(alt.covariance) / std::max(1.0, alt.covariance.diagonal().maxCoeff()));
          break;
        }
      }
      const Matrix& c = learner.belief.gaussian.covariance;
      worst = std::min(worst, min_eigenvalue(c) / std::max(1.0, c.diagonal().maxCoeff()));
    }
  }
  return {worst >= -1e-8, std::to_string(sequences) + " interleavings of " + std::to_string(ops) +
                              " updates, min scaled eigenvalue " + fmt(worst)};
}

// ---------------------------------------------------------------- simulation studies

ExperimentConfig desk_config() {
  auto c = load_config(SPKG_DATA_DIR "/configs/policy_comparison_desk.json");
  return c;
}

std::vector<const ReplicationResult*> select(const std::vector<ReplicationResult>& all, Policy p, double ratio) {
  std::vector<const ReplicationResult*> out;
  for (const auto& r : all)
    if (r.policy == p && r.noise_ratio == ratio) out.push_back(&r);
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->trial < b->trial; });
  return out;
}

std::vector<double> final_oc_pct(const std::vector<const ReplicationResult*>& rs) {
  std::vector<double> v;
  for (auto* r : rs) v.push_back(r->oc_pct.back());
  return v;
}

Outcome spkg_beats_exploration() {
  const auto t0 = Clock::now();
  const auto config = desk_config();
  const auto setup = prepare_setup(config);
  const auto results = run_replications(config, setup);
  bool pass = true;
  std::string detail = "p=" + std::to_string(setup.molecule.length()) + " M=" + std::to_string(setup.library.size()) +
                       " N=" + std::to_string(config.measurements) + " trials=" + std::to_string(config.trials);
  for (double ratio : config.noise_ratios) {
    const auto sp = final_oc_pct(select(results, Policy::spkg, ratio));
    const auto ex = final_oc_pct(select(results, Policy::explore, ratio));
    const auto kl = final_oc_pct(select(results, Policy::kg_linear, ratio));
    const auto test = paired_greater(ex, sp);
    const bool ok = test.p < 0.05 && mean_of(sp) <= mean_of(kl);
    pass = pass && ok;
    detail += "; noise " + fmt(ratio) + ": OC% spkg " + fmt(mean_of(sp)) + " explore " + fmt(mean_of(ex)) +
              " kg_linear " + fmt(mean_of(kl)) + ", paired p " + fmt(test.p);
  }
  const double secs = seconds_since(t0);
  detail += "; " + fmt(secs, 3) + " s";
  return {pass && secs < 600.0, detail};
}

Outcome scores_drop_after_measurement() {
  auto config = desk_config();
  config.policies = {Policy::batch_spkg};
  config.noise_ratios = {0.1};
  config.record_scores = true;
  const auto setup = prepare_setup(config);
  const auto results = run_replications(config, setup);
  int pairs = 0, drops = 0, ties = 0, zero_ties = 0;
  for (const auto& r : results) {
    for (std::size_t k = 0; k < r.decisions.size() && k + 1 < r.score_sweeps.size(); ++k) {
      std::set<int> measured;
      for (const auto& probe : r.decisions[k])
        for (int x = 0; x < static_cast<int>(setup.library.size()); ++x)
          if (setup.library[x].start == probe.start && setup.library[x].end == probe.end) measured.insert(x);
      for (int x : measured) {
        ++pairs;
        const double before = r.score_sweeps[k](x), after = r.score_sweeps[k + 1](x);
        drops += after < before;
        ties += after == before;
        zero_ties += after == 0.0 && before == 0.0;
      }
    }
  }
  const double frac = pairs ? static_cast<double>(drops) / pairs : 0.0;
  return {frac >= 0.80, std::to_string(drops) + "/" + std::to_string(pairs) + " measured (probe, sweep) pairs drop (" +
                            fmt(100.0 * frac, 3) + "%), " + std::to_string(ties) + " unchanged (" +
                            std::to_string(zero_ties) + " at zero), over " + std::to_string(results.size()) + " trials"};
}

// Centered moving average; windows shrink at the ends.
std::vector<double> smooth(const std::vector<double>& v, int window) {
  std::vector<double> out(v.size());
  const int half = window / 2;
  for (int i = 0; i < static_cast<int>(v.size()); ++i) {
    const int lo = std::max(0, i - half), hi = std::min(static_cast<int>(v.size()) - 1, i + half);
    double s = 0.0;
    for (int k = lo; k <= hi; ++k) s += v[k];
    out[i] = s / (hi - lo + 1);
  }
  return out;
}

Outcome learning_curves() {
  auto config = desk_config();
  config.policies = {Policy::spkg};
  config.noise_ratios = {0.2, 0.3, 0.4, 0.5};
  const auto setup = prepare_setup(config);
  const auto results = run_replications(config, setup);
  bool pass = true;
  std::string detail;
  std::vector<double> final_oc, final_err;
  for (double ratio : config.noise_ratios) {
    const auto rs = select(results, Policy::spkg, ratio);
    const std::size_t steps = rs.front()->oc_pct.size();
    std::vector<double> oc(steps, 0.0), err(steps, 0.0);
    for (auto* r : rs)
      for (std::size_t k = 0; k < steps; ++k) {
        oc[k] += r->oc_pct[k] / rs.size();
        err[k] += r->estimation_error[k] / rs.size();
      }
    const auto soc = smooth(oc, 5), serr = smooth(err, 5);
    int oc_rises = 0, err_rises = 0;
    for (std::size_t k = 1; k < steps; ++k) {
      oc_rises += soc[k] > soc[k - 1];
      err_rises += serr[k] > serr[k - 1];
    }
    pass = pass && oc_rises == 0 && err_rises == 0;
    final_oc.push_back(oc.back());
    final_err.push_back(err.back());
    detail += "noise " + fmt(ratio) + ": OC% " + fmt(oc.front()) + "->" + fmt(oc.back()) + " (" +
              std::to_string(oc_rises) + " smoothed rises), error " + fmt(err.front()) + "->" + fmt(err.back()) + " (" +
              std::to_string(err_rises) + " rises); ";
  }
  bool increasing = true;
  for (std::size_t i = 1; i < final_oc.size(); ++i)
    increasing = increasing && final_oc[i] > final_oc[i - 1] && final_err[i] > final_err[i - 1];
  detail += increasing ? "final values increase with noise" : "final values not increasing with noise";
  return {pass && increasing, detail};
}

Outcome mutagenesis_gain() {
  auto config = desk_config();
  config.policies = {Policy::batch_spkg_mutagenesis, Policy::explore_mutagenesis};
  config.noise_ratios = {0.1};
  config.trials = 100;
  const auto setup = prepare_setup(config);
  const auto results = run_replications(config, setup);
  const auto sp = select(results, Policy::batch_spkg_mutagenesis, 0.1);
  const auto ex = select(results, Policy::explore_mutagenesis, 0.1);
  int hits = 0;
  std::vector<double> sp_final, ex_final;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const auto& best = sp[i]->best_true_value;
    hits += best.back() >= 1.5 * best.front();
    sp_final.push_back(best.back());
    ex_final.push_back(ex[i]->best_true_value.back());
  }
  const auto test = paired_greater(sp_final, ex_final);
  const double frac = static_cast<double>(hits) / sp.size();
  return {frac >= 0.60 && test.p < 0.05,
          std::to_string(hits) + "/" + std::to_string(sp.size()) + " trials reach 1.5x the initial best; final best " +
              fmt(mean_of(sp_final)) + " vs exploration " + fmt(mean_of(ex_final)) + ", paired p " + fmt(test.p)};
}

// ---------------------------------------------------------------- CLI determinism

int run_command(const std::string& cmd) {
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const auto dir = fs::temp_directory_path() / "spkg_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto doc = config_to_json(desk_config());
  doc["trials"] = 5;
  doc["policies"] = {"spkg", "explore", "kg_linear", "batch_spkg"};
  std::ofstream(dir / "config.json") << doc.dump(2);
  const std::string base = std::string("\"") + SPKG_CLI + "\" simulate \"" + (dir / "config.json").string() + "\"";
  const int a = run_command(base + " --out \"" + (dir / "a").string() + "\" > \"" + (dir / "a.json").string() + "\" 2>/dev/null");
  const int b = run_command(base + " --out \"" + (dir / "b").string() + "\" > \"" + (dir / "b.json").string() + "\" 2>/dev/null");
  if (a != 0 || b != 0) return {false, "simulate exited with " + std::to_string(a) + " / " + std::to_string(b)};
  bool same = true;
  std::size_t bytes = 0;
  for (const char* f : {"trajectories.csv", "aggregate.csv"}) {
    const auto x = slurp(dir / "a" / f), y = slurp(dir / "b" / f);
    same = same && !x.empty() && x == y;
    bytes += x.size();
  }
  return {same, same ? "two runs byte-identical (" + std::to_string(bytes) + " bytes of CSV)" : "outputs differ"};
}

struct Criterion {
  std::string name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"h_oracle", h_oracle},
      {"reductions", reductions},
      {"sequential_batch", sequential_batch},
      {"lasso_homotopy", lasso_homotopy},
      {"spkg_beats_exploration", spkg_beats_exploration},
      {"scores_drop_after_measurement", scores_drop_after_measurement},
      {"learning_curves", learning_curves},
      {"mutagenesis_gain", mutagenesis_gain},
      {"prior_builder", prior_builder},
      {"psd_stress", psd_stress},
      {"determinism", determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string only;
  bool list = false;
  app.add_option("--only", only, "Run a single criterion");
  app.add_flag("--list", list, "Print criterion names");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& c : criteria()) std::cout << c.name << "\n";
    return 0;
  }
  int failed = 0, ran = 0;
  for (const auto& c : criteria()) {
    if (!only.empty() && c.name != only) continue;
    ++ran;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return failed ? 1 : 0;
}
