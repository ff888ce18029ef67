#pragma once

// Measurement-campaign sessions for the advisor service. A session holds the
// prior, the probe library and the append-only observation history; the
// learner state is always the fold of the history over the prior, so it is
// rebuilt by replay when a session file is loaded.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "spkg/learner.hpp"
#include "spkg/prior.hpp"
#include "spkg/rna.hpp"

namespace spkg::advisor {

/// Error with an HTTP status, a machine-readable code and an optional field name.
class AdvisorError : public std::runtime_error {
 public:
  AdvisorError(int status, std::string code, const std::string& message, std::string field = {})
      : std::runtime_error(message), status_(status), code_(std::move(code)), field_(std::move(field)) {}
  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }
  nlohmann::json body() const;

 private:
  int status_;
  std::string code_;
  std::string field_;
};

/// Frozen at creation.
struct SessionConfig {
  int B = 3;
  int L = 20;
  int Q = 200;
  std::optional<double> w;  // when set, inclusion priors are rebuilt from the prior mean's support
  double lambda_scale = 0.5;
  double noise_sd = 1.0;    // measurement noise assumed when scoring
  std::uint64_t seed = 1;
  /// "sparse": Lasso fusion and pattern-weighted KG. "linear": recursive least
  /// squares and linear KG, ignoring the sparsity belief.
  std::string learner = "sparse";
};

enum class SuggestMode { single, batch, batch_mutagenesis };
SuggestMode mode_from_string(const std::string& s);
std::string to_string(SuggestMode mode);

struct ObservationRecord {
  Probe probe;
  double value = 0.0;
  double noise_sd = 1.0;
};

struct HistoryEntry {
  int version = 0;  // session version after this entry
  std::vector<ObservationRecord> observations;
  nlohmann::json suggestion;  // pending suggestion at the time, or null
};

struct Pending {
  SuggestMode mode = SuggestMode::single;
  int version = 0;
  std::vector<Probe> probes;
};

struct Session {
  std::string id;
  TargetMolecule molecule;
  EnergyTable energy{};
  PriorBundle prior;
  std::vector<Probe> initial_library;
  SessionConfig config;
  std::vector<HistoryEntry> history;
  int version = 0;
  std::optional<Pending> pending;

  // Derived by replay.
  std::vector<Probe> library;
  LearnerState learner;
  ObserveReport last_report;

  nlohmann::json to_json() const;  // persisted document (no derived state)
  static Session from_json(const nlohmann::json& doc);

  /// Rebuilds the library and learner from the prior and the history.
  void replay();
  /// Belief snapshot as served by the posterior endpoint.
  nlohmann::json belief_json() const;
};

/// Builds a session from a create request. Paths in the request are resolved
/// against `base_dir`.
Session make_session(const nlohmann::json& request, std::string id, const std::filesystem::path& base_dir);

nlohmann::json suggest(Session& session, SuggestMode mode);
/// Appends one history entry and advances the learner; returns the response body.
nlohmann::json record(Session& session, const std::vector<ObservationRecord>& observations);
nlohmann::json posterior(const Session& session);
nlohmann::json summary(const Session& session);
nlohmann::json history(const Session& session);

/// Thread-safe store of sessions persisted as one JSON file each in `data_dir`.
/// Mutations on one session are serialized by a per-session lock and checked
/// against the caller's expected version; reads share the lock.
class SessionStore {
 public:
  /// Creates the directory if needed and loads every session file in it.
  explicit SessionStore(std::filesystem::path data_dir);

  nlohmann::json create(const nlohmann::json& request);
  nlohmann::json get(const std::string& id) const;
  nlohmann::json suggest(const std::string& id, SuggestMode mode, std::optional<int> expected_version);
  nlohmann::json observe(const std::string& id, const nlohmann::json& request);
  nlohmann::json posterior(const std::string& id) const;
  nlohmann::json history(const std::string& id) const;
  /// Replays the stored history into a fresh learner and compares belief JSON with the live state.
  nlohmann::json replay_check(const std::string& id) const;

  std::size_t size() const;
  const std::filesystem::path& data_dir() const { return dir_; }

 private:
  struct Slot {
    mutable std::shared_mutex mutex;
    Session session;
  };
  std::shared_ptr<Slot> find(const std::string& id) const;
  void persist(const Session& s) const;
  std::string fresh_id();

  std::filesystem::path dir_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::mutex id_mutex_;
  std::uint64_t id_counter_ = 0;
  std::uint64_t id_salt_ = 0;
};

}  // namespace spkg::advisor
