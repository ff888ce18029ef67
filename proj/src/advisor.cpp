#include "spkg/advisor.hpp"

#include <algorithm>
#include <cstdio>
#include <mutex>
#include <random>

#include "spkg/json_io.hpp"
#include "spkg/kg.hpp"

namespace spkg::advisor {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// RNG streams derived from the session seed.
constexpr std::uint64_t kInitStream = 10;
constexpr std::uint64_t kLearnStream = 11;
constexpr std::uint64_t kSuggestStream = 12;

AdvisorError invalid(const std::string& field, const std::string& message) {
  return AdvisorError(422, "invalid_input", message, field);
}

json probe_json(const Probe& p) { return {{"start", p.start}, {"end", p.end}, {"name", p.name}}; }

Probe probe_from_json(const json& j, const std::string& field) {
  if (!j.is_object() || !j.contains("start") || !j.contains("end") || !j.at("start").is_number_integer() ||
      !j.at("end").is_number_integer())
    throw invalid(field, "probe must be an object with integer start and end");
  Probe p{j.at("start").get<int>(), j.at("end").get<int>(), j.value("name", std::string{})};
  return p;
}

json library_json(const std::vector<Probe>& lib) {
  json out = json::array();
  for (const auto& p : lib) out.push_back(probe_json(p));
  return out;
}

int index_of(const std::vector<Probe>& lib, const Probe& p) {
  for (std::size_t i = 0; i < lib.size(); ++i)
    if (lib[i] == p) return static_cast<int>(i);
  return -1;
}

std::vector<bool> support(const Vector& v) {
  std::vector<bool> s(static_cast<std::size_t>(v.size()));
  for (Index j = 0; j < v.size(); ++j) s[j] = v(j) != 0.0;
  return s;
}

json config_json(const SessionConfig& c) {
  json j = {{"B", c.B},
            {"L", c.L},
            {"Q", c.Q},
            {"lambda_scale", c.lambda_scale},
            {"noise_sd", c.noise_sd},
            {"seed", c.seed},
            {"learner", c.learner}};
  j["w"] = c.w ? json(*c.w) : json(nullptr);
  return j;
}

SessionConfig config_from(const json& j) {
  SessionConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw invalid("config", "config must be an object");
  static const std::vector<std::string> known{"B", "L", "Q", "w", "lambda_scale", "noise_sd", "seed", "learner"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) throw invalid("config." + k, "unknown field");
    if (k == "learner") {
      if (!v.is_string() || (v != "sparse" && v != "linear"))
        throw invalid("config.learner", "learner must be sparse or linear");
      c.learner = v.get<std::string>();
    } else if (!v.is_number() && !(k == "w" && v.is_null())) {
      throw invalid("config." + k, "must be a number");
    }
  }
  auto int_field = [&](const char* k, int& out, int lo) {
    if (!j.contains(k)) return;
    if (!j.at(k).is_number_integer() || j.at(k).get<long long>() < lo)
      throw invalid(std::string("config.") + k, std::string("must be an integer >= ") + std::to_string(lo));
    out = j.at(k).get<int>();
  };
  int_field("B", c.B, 1);
  int_field("L", c.L, 1);
  int_field("Q", c.Q, 1);
  if (j.contains("seed")) {
    const json& seed = j.at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
      throw invalid("config.seed", "must be a nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("w") && !j.at("w").is_null()) {
    c.w = j.at("w").get<double>();
    if (!(*c.w >= 0.0)) throw invalid("config.w", "must be nonnegative");
  }
  c.lambda_scale = j.value("lambda_scale", c.lambda_scale);
  if (!(c.lambda_scale >= 0.0)) throw invalid("config.lambda_scale", "must be nonnegative");
  c.noise_sd = j.value("noise_sd", c.noise_sd);
  if (!(c.noise_sd > 0.0) || !std::isfinite(c.noise_sd)) throw invalid("config.noise_sd", "must be positive");
  return c;
}

json energy_json(const EnergyTable& t) {
  json out = json::array();
  for (double v : t) out.push_back(v);
  return out;
}

BeliefState initial_belief(const Session& s) {
  auto basis = std::make_shared<const BasisMatrix>(build_basis(s.molecule, s.initial_library, s.energy));
  SparsityBelief sparsity = s.prior.sparsity;
  if (s.config.w) sparsity = build_frequency_priors(s.prior.gaussian.mean, *s.config.w);
  return BeliefState::make(s.prior.gaussian, std::move(sparsity), std::move(basis),
                           Vector::Constant(1, s.config.noise_sd));
}

LearnerConfig learner_config(const SessionConfig& c) { return {c.L, c.lambda_scale}; }

json patterns_json(const std::vector<SparsityPattern>& patterns) {
  json out = json::array();
  for (const auto& pat : patterns) {
    json idx = json::array();
    for (std::size_t j = 0; j < pat.mask.size(); ++j)
      if (pat.mask[j]) idx.push_back(static_cast<int>(j));
    out.push_back({{"weight", pat.weight}, {"size", idx.size()}, {"included", std::move(idx)}});
  }
  return out;
}

json pending_json(const Pending& p) {
  return {{"mode", to_string(p.mode)}, {"version", p.version}, {"probes", library_json(p.probes)}};
}

Pending pending_from(const json& j) {
  Pending p;
  p.mode = mode_from_string(j.at("mode").get<std::string>());
  p.version = j.at("version").get<int>();
  for (const auto& pj : j.at("probes")) p.probes.push_back(probe_from_json(pj, "pending"));
  return p;
}

// Advances the learner by one history entry; probes missing from the library are appended.
ObserveReport apply_entry(Session& s, const HistoryEntry& e, std::uint64_t counter) {
  std::vector<Observation> batch;
  for (const auto& o : e.observations) {
    int x = index_of(s.library, o.probe);
    if (x < 0) {
      std::vector<Probe> grown = s.library;
      grown.push_back(o.probe);
      s.learner.belief = extend_belief(s.learner.belief, s.library, grown, s.molecule, s.energy);
      s.library = std::move(grown);
      x = static_cast<int>(s.library.size()) - 1;
    }
    batch.push_back({x, o.value, o.noise_sd});
  }
  if (s.config.learner == "linear") {
    const BasisMatrix& basis = *s.learner.belief.basis;
    for (const auto& o : batch)
      s.learner.belief.gaussian = rls_update(s.learner.belief.gaussian, basis.rows.row(o.alternative).transpose(),
                                             o.value - basis.intercepts(o.alternative), o.noise_sd);
    return {};
  }
  Rng rng = make_rng(s.config.seed, counter, kLearnStream);
  return learner_observe(s.learner, batch, learner_config(s.config), rng);
}

}  // namespace

json AdvisorError::body() const {
  json e = {{"code", code_}, {"message", what()}};
  if (!field_.empty()) e["field"] = field_;
  return {{"error", std::move(e)}};
}

SuggestMode mode_from_string(const std::string& s) {
  if (s == "single") return SuggestMode::single;
  if (s == "batch") return SuggestMode::batch;
  if (s == "batch_mutagenesis") return SuggestMode::batch_mutagenesis;
  throw invalid("mode", "mode must be single, batch or batch_mutagenesis");
}

std::string to_string(SuggestMode mode) {
  switch (mode) {
    case SuggestMode::single: return "single";
    case SuggestMode::batch: return "batch";
    case SuggestMode::batch_mutagenesis: return "batch_mutagenesis";
  }
  return "single";
}

json Session::to_json() const {
  json h = json::array();
  for (const auto& e : history) {
    json obs = json::array();
    for (const auto& o : e.observations)
      obs.push_back({{"probe", probe_json(o.probe)}, {"value", o.value}, {"noise_sd", o.noise_sd}});
    h.push_back({{"version", e.version}, {"observations", std::move(obs)}, {"suggestion", e.suggestion}});
  }
  return {{"schema_version", 1},
          {"id", id},
          {"molecule", {{"name", molecule.name}, {"sequence", molecule.sequence}}},
          {"energy_table", energy_json(energy)},
          {"prior", prior_to_json(prior)},
          {"library", library_json(initial_library)},
          {"config", config_json(config)},
          {"history", std::move(h)},
          {"version", version},
          {"pending", pending ? pending_json(*pending) : json(nullptr)}};
}

Session Session::from_json(const json& doc) {
  Session s;
  s.id = doc.at("id").get<std::string>();
  s.molecule = TargetMolecule::make(doc.at("molecule").at("name").get<std::string>(),
                                    doc.at("molecule").at("sequence").get<std::string>());
  const auto& et = doc.at("energy_table");
  if (!et.is_array() || et.size() != s.energy.size()) throw ValidationError("energy_table", "need 16 entries");
  for (std::size_t i = 0; i < s.energy.size(); ++i) s.energy[i] = et[i].get<double>();
  s.prior = prior_from_json(doc.at("prior"));
  for (const auto& pj : doc.at("library")) s.initial_library.push_back(probe_from_json(pj, "library"));
  s.config = config_from(doc.at("config"));
  for (const auto& ej : doc.at("history")) {
    HistoryEntry e;
    e.version = ej.at("version").get<int>();
    for (const auto& oj : ej.at("observations"))
      e.observations.push_back(
          {probe_from_json(oj.at("probe"), "history"), oj.at("value").get<double>(), oj.at("noise_sd").get<double>()});
    e.suggestion = ej.value("suggestion", json(nullptr));
    s.history.push_back(std::move(e));
  }
  s.version = doc.at("version").get<int>();
  if (doc.contains("pending") && !doc.at("pending").is_null()) s.pending = pending_from(doc.at("pending"));
  s.replay();
  return s;
}

void Session::replay() {
  library = initial_library;
  Rng rng = make_rng(config.seed, 0, kInitStream);
  learner = make_learner(initial_belief(*this), support(prior.gaussian.mean), learner_config(config), rng);
  last_report = {};
  for (std::size_t k = 0; k < history.size(); ++k) last_report = apply_entry(*this, history[k], k);
}

json Session::belief_json() const { return belief_to_json(learner.belief.gaussian, learner.belief.sparsity); }

Session make_session(const json& req, std::string id, const fs::path& base_dir) {
  if (!req.is_object()) throw invalid("", "request body must be a JSON object");
  static const std::vector<std::string> known{"molecule", "prior", "library", "config", "energy_table", "range"};
  for (const auto& [k, v] : req.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) throw invalid(k, "unknown field");
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };

  Session s;
  s.id = std::move(id);
  try {
    if (!req.contains("molecule")) throw invalid("molecule", "molecule is required");
    const json& mj = req.at("molecule");
    if (mj.is_string()) {
      s.molecule = read_fasta(resolve(mj.get<std::string>()).string());
    } else if (mj.is_object() && mj.contains("sequence")) {
      s.molecule = TargetMolecule::make(mj.value("name", std::string("molecule")), mj.at("sequence").get<std::string>());
    } else {
      throw invalid("molecule", "molecule must be a FASTA path or an object with a sequence");
    }
    if (req.contains("range")) {
      const json& r = req.at("range");
      if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer())
        throw invalid("range", "range must be [first, last]");
      s.molecule = s.molecule.slice(r[0].get<int>(), r[1].get<int>());
    }
  } catch (const AdvisorError&) {
    throw;
  } catch (const std::exception& e) {
    throw invalid("molecule", e.what());
  }

  try {
    s.energy = req.contains("energy_table") ? load_energy_table(resolve(req.at("energy_table").get<std::string>()).string())
                                            : default_energy_table();
  } catch (const std::exception& e) {
    throw invalid("energy_table", e.what());
  }

  if (!req.contains("prior")) throw invalid("prior", "prior is required");
  try {
    const json& pj = req.at("prior");
    s.prior = pj.is_string() ? load_prior(resolve(pj.get<std::string>()).string()) : prior_from_json(pj);
  } catch (const ValidationError& e) {
    throw invalid(e.field().empty() ? "prior" : "prior." + e.field(), e.what());
  } catch (const std::exception& e) {
    throw invalid("prior", e.what());
  }
  if (s.prior.features() != s.molecule.length())
    throw invalid("prior", "prior has " + std::to_string(s.prior.features()) + " coefficients but the molecule has " +
                               std::to_string(s.molecule.length()) + " nucleotides");

  const int p = s.molecule.length();
  try {
    const json lj = req.value("library", json::object());
    if (lj.is_array()) {
      for (std::size_t i = 0; i < lj.size(); ++i)
        s.initial_library.push_back(probe_from_json(lj[i], "library[" + std::to_string(i) + "]"));
    } else if (lj.is_object()) {
      const std::string kind = lj.value("kind", std::string("uniform"));
      if (kind == "uniform")
        s.initial_library = generate_uniform_library(p, lj.value("length", 10), lj.value("overlap", 3));
      else if (kind == "curated")
        s.initial_library = generate_curated_library(p, lj.value("first", 1), lj.value("last", p));
      else if (kind == "file")
        s.initial_library = read_probe_csv(resolve(lj.at("path").get<std::string>()).string());
      else
        throw invalid("library.kind", "library kind must be uniform, curated or file");
    } else {
      throw invalid("library", "library must be an array of probes or a generator object");
    }
    for (const auto& probe : s.initial_library) validate_probe(probe, p);
    normalize_library(s.initial_library);
  } catch (const AdvisorError&) {
    throw;
  } catch (const ValidationError& e) {
    throw invalid("library", e.what());
  } catch (const std::exception& e) {
    throw invalid("library", e.what());
  }
  if (s.initial_library.empty()) throw invalid("library", "library is empty");

  s.config = config_from(req.value("config", json(nullptr)));
  try {
    s.replay();
  } catch (const std::exception& e) {
    throw invalid("prior", e.what());
  }
  return s;
}

json suggest(Session& s, SuggestMode mode) {
  Rng rng = make_rng(s.config.seed, s.history.size(), kSuggestStream);
  const LearnerState& L = s.learner;
  json out = {{"id", s.id}, {"version", s.version}, {"mode", to_string(mode)}};

  const bool linear = s.config.learner == "linear";
  const LibraryScorer scorer = [linear](const BeliefState& b, const std::vector<SparsityPattern>& pats) {
    return linear ? kg_linear(b.gaussian, *b.basis, b.noise_sd) : spkg_scores(b, pats);
  };

  std::vector<Probe> lib = s.library;
  BeliefState belief = L.belief;
  int known = static_cast<int>(lib.size());
  if (mode == SuggestMode::batch_mutagenesis) {
    auto ex = expand_library(lib, belief, L.patterns, s.molecule, s.energy, scorer);
    lib = std::move(ex.library);
    belief = std::move(ex.belief);
  }

  const KGScores first = scorer(belief, L.patterns);
  BatchDecision decision;
  if (mode == SuggestMode::single) {
    decision.alternatives = {first.argmax};
    decision.per_step_scores = {first.scores(first.argmax)};
    decision.mc_standard_errors = {0.0};
  } else if (linear) {
    const auto alt = project_to_alternatives(belief.gaussian, *belief.basis);
    decision = batch_kg_select(alt.mean, alt.covariance, belief.noise_sd, s.config.B, s.config.Q, rng);
  } else {
    decision = batch_spkg_select(belief, L.patterns, s.config.B, s.config.Q, rng);
  }

  const double mean_score = first.scores.mean();
  json scores = json::array();
  for (std::size_t m = 0; m < lib.size(); ++m)
    scores.push_back({{"probe", probe_json(lib[m])},
                      {"score", first.scores(static_cast<Index>(m))},
                      {"above_mean", first.scores(static_cast<Index>(m)) > mean_score},
                      {"new", static_cast<int>(m) >= known}});

  json picks = json::array();
  Pending pending{mode, s.version, {}};
  for (std::size_t i = 0; i < decision.alternatives.size(); ++i) {
    const int x = decision.alternatives[i];
    pending.probes.push_back(lib[x]);
    picks.push_back({{"probe", probe_json(lib[x])},
                     {"index", x},
                     {"new", x >= known},
                     {"value", decision.per_step_scores[i]},
                     {"mc_standard_error", decision.mc_standard_errors[i]}});
  }
  out["suggestions"] = std::move(picks);
  out["scores"] = std::move(scores);
  out["pattern_weights"] = patterns_json(L.patterns);
  s.pending = std::move(pending);
  return out;
}

json record(Session& s, const std::vector<ObservationRecord>& observations) {
  if (observations.empty()) throw invalid("observations", "at least one observation is required");
  const int p = s.molecule.length();
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& o = observations[i];
    const std::string f = "observations[" + std::to_string(i) + "]";
    if (!std::isfinite(o.value)) throw invalid(f + ".value", "value must be finite");
    if (!(o.noise_sd > 0.0) || !std::isfinite(o.noise_sd)) throw invalid(f + ".noise_sd", "noise_sd must be positive");
    if (index_of(s.library, o.probe) >= 0) continue;
    // A probe outside the library is accepted only when it was suggested by a pending mutagenesis step.
    const bool suggested = s.pending && index_of(s.pending->probes, o.probe) >= 0;
    try {
      validate_probe(o.probe, p);
    } catch (const std::exception& e) {
      throw invalid(f + ".probe", e.what());
    }
    if (!suggested) throw invalid(f + ".probe", "probe is not in the session library");
  }

  Session next = s;
  HistoryEntry e;
  e.version = s.version + 1;
  e.observations = observations;
  // Names follow the library copy of each probe.
  for (auto& o : e.observations) {
    const int x = index_of(next.library, o.probe);
    if (x >= 0) o.probe.name = next.library[x].name;
  }
  e.suggestion = s.pending ? pending_json(*s.pending) : json(nullptr);

  const Vector mean_before = next.learner.belief.gaussian.mean;
  const Vector incl_before = next.learner.belief.sparsity.inclusion();
  const int library_before = static_cast<int>(next.library.size());
  next.last_report = apply_entry(next, e, next.history.size());
  next.history.push_back(std::move(e));
  next.version += 1;
  next.pending.reset();

  const Vector dm = next.learner.belief.gaussian.mean - mean_before;
  const Vector di = next.learner.belief.sparsity.inclusion() - incl_before;
  json delta = {{"mean_change_norm", dm.norm()},
                {"max_abs_mean_change", dm.size() ? dm.cwiseAbs().maxCoeff() : 0.0},
                {"max_abs_inclusion_change", di.size() ? di.cwiseAbs().maxCoeff() : 0.0},
                {"active", next.last_report.active},
                {"lambda", next.last_report.lambda},
                {"homotopy_fallback", next.last_report.fallback},
                {"library_added", static_cast<int>(next.library.size()) - library_before}};
  s = std::move(next);
  return {{"id", s.id}, {"version", s.version}, {"delta", std::move(delta)}};
}

json posterior(const Session& s) {
  const BeliefState& b = s.learner.belief;
  const BasisMatrix& basis = *b.basis;
  const Vector mean = basis.rows * b.gaussian.mean + basis.intercepts;
  const Vector var = (basis.rows * b.gaussian.covariance * basis.rows.transpose()).diagonal();
  json preds = json::array();
  for (std::size_t m = 0; m < s.library.size(); ++m)
    preds.push_back({{"probe", probe_json(s.library[m])},
                     {"mean", mean(static_cast<Index>(m))},
                     {"sd", std::sqrt(std::max(0.0, var(static_cast<Index>(m))))}});
  const LassoState& lasso = s.learner.lasso;
  return {{"id", s.id},
          {"version", s.version},
          {"belief", s.belief_json()},
          {"inclusion", to_json_vector(b.sparsity.inclusion())},
          {"predictions", std::move(preds)},
          {"patterns", patterns_json(s.learner.patterns)},
          {"diagnostics",
           {{"observations", lasso.observations()},
            {"active", lasso.active},
            {"lambda", lasso.lambda},
            {"homotopy_fallbacks", s.learner.fallbacks},
            {"noise_sd_rms", learner_noise_sd(s.learner)}}}};
}

json summary(const Session& s) {
  return {{"id", s.id},
          {"version", s.version},
          {"molecule", {{"name", s.molecule.name}, {"length", s.molecule.length()}}},
          {"config", config_json(s.config)},
          {"library", library_json(s.library)},
          {"observations", s.learner.lasso.observations()},
          {"history_length", s.history.size()},
          {"pending", s.pending ? pending_json(*s.pending) : json(nullptr)}};
}

json history(const Session& s) {
  json doc = s.to_json();
  return {{"id", s.id}, {"version", s.version}, {"history", doc.at("history")}};
}

// ---------------------------------------------------------------- store

SessionStore::SessionStore(fs::path data_dir) : dir_(std::move(data_dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) throw std::runtime_error("cannot use data directory " + dir_.string());
  // Probe writability up front so a read-only directory fails at startup.
  const fs::path probe = dir_ / ".write_probe";
  if (std::FILE* f = std::fopen(probe.c_str(), "w")) {
    std::fclose(f);
    fs::remove(probe, ec);
  } else {
    throw std::runtime_error("data directory is not writable: " + dir_.string());
  }
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.path().extension() != ".json") continue;
    auto slot = std::make_shared<Slot>();
    slot->session = Session::from_json(read_json_file(entry.path().string()));
    sessions_.emplace(slot->session.id, std::move(slot));
  }
  id_salt_ = std::random_device{}();
  id_salt_ = (id_salt_ << 32) ^ std::random_device{}();
}

std::string SessionStore::fresh_id() {
  std::lock_guard lock(id_mutex_);
  char buf[17];
  for (;;) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(mix64(id_salt_ + ++id_counter_)));
    std::shared_lock map_lock(map_mutex_);
    if (!sessions_.count(buf)) return buf;
  }
}

std::shared_ptr<SessionStore::Slot> SessionStore::find(const std::string& id) const {
  std::shared_lock lock(map_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw AdvisorError(404, "not_found", "no session with id " + id);
  return it->second;
}

void SessionStore::persist(const Session& s) const {
  try {
    write_json_file((dir_ / (s.id + ".json")).string(), s.to_json());
  } catch (const std::exception& e) {
    throw AdvisorError(500, "persistence_failed", e.what());
  }
}

std::size_t SessionStore::size() const {
  std::shared_lock lock(map_mutex_);
  return sessions_.size();
}

json SessionStore::create(const json& request) {
  auto slot = std::make_shared<Slot>();
  slot->session = make_session(request, fresh_id(), fs::current_path());
  persist(slot->session);
  json out = summary(slot->session);
  std::unique_lock lock(map_mutex_);
  sessions_.emplace(slot->session.id, std::move(slot));
  return out;
}

json SessionStore::get(const std::string& id) const {
  auto slot = find(id);
  std::shared_lock lock(slot->mutex);
  return summary(slot->session);
}

json SessionStore::suggest(const std::string& id, SuggestMode mode, std::optional<int> expected_version) {
  auto slot = find(id);
  std::unique_lock lock(slot->mutex);
  Session& s = slot->session;
  if (expected_version && *expected_version != s.version)
    throw AdvisorError(409, "version_conflict",
                       "expected version " + std::to_string(*expected_version) + ", session is at " +
                           std::to_string(s.version),
                       "expected_version");
  Session next = s;
  json out = advisor::suggest(next, mode);
  persist(next);
  s = std::move(next);
  return out;
}

json SessionStore::observe(const std::string& id, const json& request) {
  if (!request.is_object()) throw invalid("", "request body must be a JSON object");
  if (!request.contains("expected_version") || !request.at("expected_version").is_number_integer())
    throw invalid("expected_version", "expected_version is required");
  const int expected = request.at("expected_version").get<int>();

  std::vector<ObservationRecord> obs;
  auto parse_one = [&](const json& j, const std::string& f) {
    if (!j.is_object()) throw invalid(f, "observation must be an object");
    if (!j.contains("probe")) throw invalid(f + ".probe", "probe is required");
    if (!j.contains("value") || !j.at("value").is_number()) throw invalid(f + ".value", "value must be a number");
    ObservationRecord r;
    r.probe = probe_from_json(j.at("probe"), f + ".probe");
    r.value = j.at("value").get<double>();
    if (j.contains("noise_sd")) {
      if (!j.at("noise_sd").is_number()) throw invalid(f + ".noise_sd", "noise_sd must be a number");
      r.noise_sd = j.at("noise_sd").get<double>();
    } else {
      r.noise_sd = -1.0;  // filled from the session config below
    }
    obs.push_back(r);
  };
  if (request.contains("observations")) {
    const json& arr = request.at("observations");
    if (!arr.is_array()) throw invalid("observations", "observations must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) parse_one(arr[i], "observations[" + std::to_string(i) + "]");
  } else {
    parse_one(request, "observation");
  }

  auto slot = find(id);
  std::unique_lock lock(slot->mutex);
  Session& s = slot->session;
  if (expected != s.version)
    throw AdvisorError(409, "version_conflict",
                       "expected version " + std::to_string(expected) + ", session is at " + std::to_string(s.version),
                       "expected_version");
  for (auto& o : obs)
    if (o.noise_sd < 0.0) o.noise_sd = s.config.noise_sd;
  Session next = s;
  json out;
  try {
    out = record(next, obs);
  } catch (const AdvisorError&) {
    throw;
  } catch (const ValidationError& e) {
    throw invalid(e.field(), e.what());
  }
  persist(next);
  s = std::move(next);
  return out;
}

json SessionStore::posterior(const std::string& id) const {
  auto slot = find(id);
  std::shared_lock lock(slot->mutex);
  return advisor::posterior(slot->session);
}

json SessionStore::history(const std::string& id) const {
  auto slot = find(id);
  std::shared_lock lock(slot->mutex);
  return advisor::history(slot->session);
}

json SessionStore::replay_check(const std::string& id) const {
  auto slot = find(id);
  std::shared_lock lock(slot->mutex);
  const Session& live = slot->session;
  Session replayed = Session::from_json(live.to_json());
  const std::string a = live.belief_json().dump();
  const std::string b = replayed.belief_json().dump();
  return {{"id", id}, {"version", live.version}, {"identical", a == b}, {"history_length", live.history.size()}};
}

}  // namespace spkg::advisor
