// spkg: simulations, prior fitting, probe scoring, mutagenesis listing and the advisor service.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or input error.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>

#include "spkg/advisor_http.hpp"
#include "spkg/csv.hpp"
#include "spkg/json_io.hpp"
#include "spkg/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

// Raised for bad inputs detected after argument parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::string out = "results";
  int jobs = 0;
};

int run_simulate(const SimulateArgs& a) {
  json doc;
  try {
    doc = spkg::read_json_file(a.config);
  } catch (const std::exception& e) {
    throw UsageError(a.config + ": " + e.what());
  }
  if (!doc.is_object()) throw UsageError(a.config + ": configuration must be a JSON object");
  if (a.trials) doc["trials"] = *a.trials;
  if (a.seed) doc["seed"] = *a.seed;
  spkg::ExperimentConfig config;
  spkg::Setup setup;
  try {
    config = spkg::config_from_json(doc, fs::path(a.config).parent_path().string());
    setup = spkg::prepare_setup(config);
  } catch (const spkg::ConfigError& e) {
    throw UsageError(a.config + ": " + e.what());
  } catch (const spkg::ValidationError& e) {
    throw UsageError(a.config + ": " + (e.field().empty() ? "" : e.field() + ": ") + e.what());
  } catch (const spkg::CsvError& e) {
    throw UsageError(e.what());
  }
  std::cerr << "simulate: seed " << config.seed << ", " << config.trials << " trials, p = " << setup.molecule.length()
            << ", M = " << setup.library.size() << "\n";
  const auto results = spkg::run_replications(config, setup, a.jobs);
  const auto exported = spkg::export_results(results, a.out);
  json summary = exported.summary;
  summary["seed"] = config.seed;
  summary["trajectories"] = exported.trajectories_path;
  summary["aggregate"] = exported.aggregate_path;
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------- fit-prior

struct FitArgs {
  std::string profile;
  double w = 10.0;
  double r = spkg::kDefaultNoiseRatio;
  int max_lag = 100;
  std::optional<double> kappa;
  std::optional<int> budget;
  std::string out = "prior.json";
};

int run_fit_prior(const FitArgs& a) {
  spkg::ProfileLoad load;
  try {
    load = spkg::load_footprinting(a.profile);
  } catch (const spkg::CsvError& e) {
    throw UsageError(e.what());
  } catch (const spkg::ValidationError& e) {
    throw UsageError(a.profile + ": " + e.what());
  }
  if (a.max_lag < 1 || a.max_lag >= load.profile.length()) throw UsageError("--max-lag must be in [1, p)");
  if (!(a.r > 0.0)) throw UsageError("--r must be positive");
  if (!(a.w >= 0.0)) throw UsageError("--w must be nonnegative");
  for (int g : load.gaps) std::cerr << "fit-prior: position " << g << " missing, set to 0\n";
  const auto fit = spkg::fit_decay_rate(load.profile, a.max_lag);
  const double kappa = a.kappa ? *a.kappa : fit.kappa;
  std::string warning;
  spkg::PriorBundle bundle = spkg::build_prior(load.profile, a.r, kappa, a.w);
  spkg::build_frequency_priors(load.profile.values, a.w, a.budget, &warning);
  if (!warning.empty()) std::cerr << "fit-prior: warning: " << warning << "\n";
  spkg::save_prior(a.out, bundle);
  std::cout << json{{"out", a.out},
                    {"p", load.profile.length()},
                    {"kappa", kappa},
                    {"fitted_kappa", fit.kappa},
                    {"lag1_autocorrelation", fit.autocorr.size() > 1 ? fit.autocorr(1) : 0.0},
                    {"r", a.r},
                    {"w", a.w},
                    {"gaps", load.gaps.size()}}
                   .dump(2)
            << "\n";
  return kOk;
}

// ---------------------------------------------------------------- serve

struct ServeArgs {
  std::string addr;
  std::string data_dir;
  std::string config;
  bool enable_replay = false;
};

std::atomic<spkg::advisor::AdvisorServer*> g_server{nullptr};

extern "C" void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

int run_serve(ServeArgs a) {
  json file = json::object();
  if (!a.config.empty()) {
    try {
      file = spkg::read_json_file(a.config);
    } catch (const std::exception& e) {
      throw UsageError(a.config + ": " + e.what());
    }
  }
  // Precedence: flags, then environment, then the config file, then defaults.
  if (a.addr.empty()) a.addr = env_or("SPKG_ADDR", file.value("addr", std::string("127.0.0.1:8080")));
  if (a.data_dir.empty()) a.data_dir = env_or("SPKG_DATA_DIR", file.value("data_dir", std::string("spkg-data")));
  if (!a.enable_replay) a.enable_replay = file.value("enable_replay", false);

  std::pair<std::string, int> hp;
  try {
    hp = spkg::advisor::parse_address(a.addr);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  std::unique_ptr<spkg::advisor::SessionStore> store;
  try {
    store = std::make_unique<spkg::advisor::SessionStore>(a.data_dir);
  } catch (const std::exception& e) {
    std::cerr << "serve: " << e.what() << "\n";
    return kRuntime;
  }
  spkg::advisor::AdvisorServer server(*store, {a.enable_replay, file.value("cors_origin", std::string("*"))});
  if (!server.bind(hp.first, hp.second)) {
    std::cerr << "serve: cannot bind " << a.addr << "\n";
    return kRuntime;
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serve: listening on " << hp.first << ":" << server.port() << ", data dir " << a.data_dir << ", "
            << store->size() << " sessions loaded\n"
            << std::flush;
  // Session writes complete before each response, so stopping needs no extra flush.
  server.listen();
  g_server = nullptr;
  std::cerr << "serve: stopped\n";
  return kOk;
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
  std::string bundle;
  std::string library;
  std::string molecule;
  std::string energy_table;
  std::optional<std::pair<int, int>> range;
  std::string policy = "spkg";
  int B = 3;
  int Q = 200;
  int L = 20;
  double noise_sd = 1.0;
  std::uint64_t seed = 1;
  std::string out;
};

int run_score(const ScoreArgs& a) {
  spkg::PriorBundle bundle;
  spkg::TargetMolecule molecule;
  std::vector<spkg::Probe> library;
  spkg::EnergyTable energy;
  try {
    bundle = spkg::load_prior(a.bundle);
    molecule = spkg::read_fasta(a.molecule);
    if (a.range) molecule = molecule.slice(a.range->first, a.range->second);
    library = spkg::read_probe_csv(a.library);
    for (const auto& p : library) spkg::validate_probe(p, molecule.length());
    energy = a.energy_table.empty() ? spkg::default_energy_table() : spkg::load_energy_table(a.energy_table);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (bundle.features() != molecule.length())
    throw UsageError("bundle has " + std::to_string(bundle.features()) + " coefficients but the molecule has " +
                     std::to_string(molecule.length()) + " nucleotides");
  if (library.empty()) throw UsageError("probe library is empty");
  if (!(a.noise_sd > 0.0)) throw UsageError("--noise-sd must be positive");

  auto basis = std::make_shared<const spkg::BasisMatrix>(spkg::build_basis(molecule, library, energy));
  const auto belief = spkg::BeliefState::make(bundle.gaussian, bundle.sparsity, basis, spkg::Vector::Constant(1, a.noise_sd));
  std::vector<bool> support(static_cast<std::size_t>(bundle.features()));
  for (int j = 0; j < bundle.features(); ++j) support[j] = bundle.gaussian.mean(j) != 0.0;
  spkg::Rng rng = spkg::make_rng(a.seed, 0, 0);
  const auto patterns = spkg::enumerate_patterns(bundle.sparsity, a.L, rng, support);

  spkg::KGScores scores;
  std::vector<int> order(library.size(), -1);
  if (a.policy == "kg_linear") {
    scores = spkg::kg_linear(belief.gaussian, *basis, belief.noise_sd);
  } else {
    scores = spkg::spkg_scores(belief, patterns);
    if (a.policy == "batch_spkg") {
      const auto batch = spkg::batch_spkg_select(belief, patterns, a.B, a.Q, rng);
      for (std::size_t i = 0; i < batch.alternatives.size(); ++i) order[batch.alternatives[i]] = static_cast<int>(i);
    }
  }
  const double mean = scores.scores.mean();

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw std::runtime_error("cannot write " + a.out);
  }
  std::ostream& os = a.out.empty() ? std::cout : file;
  os << "probe,start,end,score,above_mean";
  if (a.policy == "batch_spkg") os << ",batch_order";
  os << "\n";
  for (std::size_t m = 0; m < library.size(); ++m) {
    const double s = scores.scores(static_cast<spkg::Index>(m));
    os << library[m].name << ',' << library[m].start << ',' << library[m].end << ',' << spkg::format_double(s) << ','
       << (s > mean ? 1 : 0);
    if (a.policy == "batch_spkg") os << ',' << order[m];
    os << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------- mutate

int run_mutate(const std::string& probe_text, const std::string& molecule, std::optional<int> p_flag) {
  static const std::regex pattern(R"(\s*\[?\s*(\d+)\s*,\s*(\d+)\s*\]?\s*)");
  std::smatch m;
  if (!std::regex_match(probe_text, m, pattern)) throw UsageError("probe must look like START,END, got '" + probe_text + "'");
  spkg::Probe probe{std::stoi(m[1]), std::stoi(m[2]), {}};
  int p = 0;
  if (p_flag) {
    p = *p_flag;
  } else if (!molecule.empty()) {
    try {
      p = spkg::read_fasta(molecule).length();
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  } else {
    throw UsageError("give the molecule length with -p or a FASTA file with --molecule");
  }
  try {
    spkg::validate_probe(probe, p);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  for (const auto& n : spkg::mutagenesis_neighbors(probe, p)) std::cout << n.start << ',' << n.end << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse knowledge-gradient probe design"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a simulation study from a JSON configuration");
  simulate->add_option("config", sim.config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--trials", sim.trials, "Override the number of trials");
  simulate->add_option("--seed", sim.seed, "Override the master seed");
  simulate->add_option("--out", sim.out, "Output directory for trajectories.csv and aggregate.csv")
      ->capture_default_str();
  simulate->add_option("--jobs", sim.jobs, "Parallel trials (0: all cores)")->capture_default_str();

  FitArgs fit;
  auto* fit_prior = app.add_subcommand("fit-prior", "Build a prior bundle from a footprinting profile");
  fit_prior->add_option("profile", fit.profile, "Footprinting CSV (position,value)")->required()->check(CLI::ExistingFile);
  fit_prior->add_option("--w", fit.w, "Confidence weight of the footprinting sparsity pattern")->capture_default_str();
  fit_prior->add_option("--r", fit.r, "Prior noise ratio")->capture_default_str();
  fit_prior->add_option("--max-lag", fit.max_lag, "Largest autocorrelation lag in the decay fit")->capture_default_str();
  fit_prior->add_option("--kappa", fit.kappa, "Use this decay rate instead of the fitted one");
  fit_prior->add_option("--budget", fit.budget, "Measurement budget; warns when w exceeds it");
  fit_prior->add_option("--out", fit.out, "Output bundle path")->capture_default_str();

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Run the advisor HTTP service");
  serve->add_option("--addr", serve_args.addr, "host:port to listen on (env SPKG_ADDR, default 127.0.0.1:8080)");
  serve->add_option("--data-dir", serve_args.data_dir, "Session directory (env SPKG_DATA_DIR, default spkg-data)");
  serve->add_option("--config", serve_args.config, "JSON with addr, data_dir, enable_replay, cors_origin")
      ->check(CLI::ExistingFile);
  serve->add_flag("--enable-replay", serve_args.enable_replay, "Expose GET /sessions/{id}/replay");

  ScoreArgs sc;
  std::vector<int> range;
  auto* score = app.add_subcommand("score", "Score a probe library under a prior bundle");
  score->add_option("bundle", sc.bundle, "Prior bundle JSON")->required()->check(CLI::ExistingFile);
  score->add_option("library", sc.library, "Probe CSV (name,start,end)")->required()->check(CLI::ExistingFile);
  score->add_option("--molecule", sc.molecule, "Target molecule FASTA")->required()->check(CLI::ExistingFile);
  score->add_option("--range", range, "1-based inclusive range of the molecule the bundle covers")->expected(2);
  score->add_option("--energy-table", sc.energy_table, "Stacking energy CSV")->check(CLI::ExistingFile);
  score->add_option("--policy", sc.policy, "spkg, kg_linear or batch_spkg")
      ->check(CLI::IsMember({"spkg", "kg_linear", "batch_spkg"}))
      ->capture_default_str();
  score->add_option("--B", sc.B, "Batch size")->check(CLI::PositiveNumber)->capture_default_str();
  score->add_option("--Q", sc.Q, "Monte Carlo samples")->check(CLI::Range(2, 1 << 24))->capture_default_str();
  score->add_option("--L", sc.L, "Sparsity patterns")->check(CLI::PositiveNumber)->capture_default_str();
  score->add_option("--noise-sd", sc.noise_sd, "Measurement noise sd")->capture_default_str();
  score->add_option("--seed", sc.seed, "Seed for pattern sampling and Monte Carlo")->capture_default_str();
  score->add_option("--out", sc.out, "Write the CSV here instead of standard output");

  std::string probe_text, mutate_molecule;
  std::optional<int> mutate_p;
  auto* mutate = app.add_subcommand("mutate", "List the length-mutagenesis neighbors of a probe");
  mutate->add_option("probe", probe_text, "Probe as START,END (1-based, inclusive)")->required();
  mutate->add_option("--molecule", mutate_molecule, "FASTA file giving the molecule length");
  mutate->add_option("-p", mutate_p, "Molecule length")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*fit_prior) return run_fit_prior(fit);
    if (*serve) return run_serve(serve_args);
    if (*score) {
      if (!range.empty()) sc.range = std::pair{range[0], range[1]};
      return run_score(sc);
    }
    if (*mutate) return run_mutate(probe_text, mutate_molecule, mutate_p);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
