#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "priorbo/harness.hpp"

namespace priorbo {

struct CampaignSpec {
  std::string name;
  Support domain{Matrix()};
  std::vector<std::string> names;  // per dimension, may be empty
  std::vector<std::string> units;
  nlohmann::json prior = {{"type", "uniform"}};
  std::string strategy = "psg";
  StrategyConfig config{};
  KernelMode kernel{};
  Sense sense = Sense::kMaximize;

  /// Field-level ValidationError on any problem. Zero N / m are replaced by
  /// `default_n` / `default_m` when given, so the stored spec is explicit.
  static CampaignSpec from_json(const nlohmann::json& j, std::size_t default_n = 0, std::size_t default_m = 0);
  nlohmann::json to_json() const;

  std::size_t dim() const;
  bool discrete() const noexcept { return std::holds_alternative<Matrix>(domain); }
  OptimumPrior make_prior() const;
};

struct CampaignObservation {
  Vector input;
  std::optional<std::size_t> candidate_index;
  double value = 0.0;  // objective sense
  std::string timestamp;
  std::string note;
  std::optional<std::size_t> resolves;  // suggestion index told by this observation
};

enum class SuggestionStatus { kPending, kTold, kSkipped };
std::string_view to_string(SuggestionStatus s) noexcept;

struct SuggestionRecord {
  Suggestion suggestion;
  SuggestionStatus status = SuggestionStatus::kPending;
  std::size_t observations_at_ask = 0;
  std::string timestamp;
};

struct TellResult {
  std::size_t observation_index = 0;
  std::optional<std::size_t> resolved;  // suggestion told, if the input matched the pending one
  bool pending_unmatched = false;       // a pending suggestion exists and was not matched
};

/// In-memory campaign state. Every mutation is an event; applying the same
/// event sequence always reproduces the same state.
class Campaign {
 public:
  static Campaign replay(const std::vector<nlohmann::json>& events);

  const std::string& id() const noexcept { return id_; }
  const std::string& created_at() const noexcept { return created_at_; }
  const CampaignSpec& spec() const noexcept { return spec_; }
  const std::vector<CampaignObservation>& observations() const noexcept { return observations_; }
  const std::vector<SuggestionRecord>& suggestions() const noexcept { return suggestions_; }
  const std::vector<nlohmann::json>& events() const noexcept { return events_; }
  bool archived() const noexcept { return archived_; }
  std::optional<std::size_t> pending() const;
  /// Index of the best observation in objective sense.
  std::optional<std::size_t> best() const;

  /// Validates and applies one event. Throws without modifying state.
  TellResult apply(const nlohmann::json& event);

  /// Model state for the next suggestion (values in the maximization frame).
  BoState state() const;
  /// Computes the next suggestion without recording it.
  Suggestion compute_ask() const;
  /// Recomputes the suggestion recorded at `index` from the journal prefix that preceded it.
  Suggestion recompute(std::size_t suggestion_index) const;
  MaximizerCloud density(std::size_t count, std::uint64_t seed) const;

  nlohmann::json to_json(bool include_clouds = true) const;
  nlohmann::json summary() const;
  void write_trace_csv(std::ostream& out) const;

 private:
  std::string id_;
  std::string created_at_;
  CampaignSpec spec_;
  std::vector<CampaignObservation> observations_;
  std::vector<SuggestionRecord> suggestions_;
  std::vector<nlohmann::json> events_;
  bool archived_ = false;
};

nlohmann::json create_event(const std::string& id, const std::string& created_at, const CampaignSpec& spec);
nlohmann::json ask_event(const Suggestion& s, const std::string& timestamp);
/// `input` is a point or null when `candidate_index` is given.
nlohmann::json tell_event(const std::optional<Vector>& input, std::optional<std::size_t> candidate_index,
                          double value, const std::string& note, const std::string& timestamp);
nlohmann::json suggestion_to_json(const Suggestion& s);
nlohmann::json cloud_to_json(const MaximizerCloud& cloud);

/// Append-only JSON-lines journal, one file per campaign.
class Journal {
 public:
  explicit Journal(std::filesystem::path path) : path_(std::move(path)) {}
  /// Reads complete lines; a torn final line (no newline or unparsable) is
  /// dropped and truncated away. Corruption before the tail throws.
  std::vector<nlohmann::json> load();
  /// Appends one line and fsyncs.
  void append(const nlohmann::json& event);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

struct StoreOptions {
  std::size_t default_num_samples = 0;
  std::size_t default_feature_count = 0;
  std::function<std::string()> clock;  // ISO-8601 timestamps; defaults to UTC now
  std::function<std::string()> id_source;  // defaults to random 16 hex digits
};

/// Thread-safe campaign collection backed by a data directory.
class CampaignStore {
 public:
  explicit CampaignStore(std::filesystem::path data_dir, StoreOptions options = {});

  std::string create(const nlohmann::json& spec);
  std::vector<nlohmann::json> list() const;
  nlohmann::json get(const std::string& id) const;
  Suggestion ask(const std::string& id);
  nlohmann::json tell(const std::string& id, const nlohmann::json& body);
  nlohmann::json skip(const std::string& id);
  nlohmann::json archive(const std::string& id);
  /// Without `seed`, each call uses a fresh seed derived from the campaign's base seed.
  MaximizerCloud density(const std::string& id, std::size_t count, std::optional<std::uint64_t> seed = std::nullopt,
                         std::uint64_t* seed_used = nullptr);
  nlohmann::json export_campaign(const std::string& id) const;
  /// Validates by replay. Keeps the exported id; Conflict if it is taken.
  std::string import_campaign(const nlohmann::json& document);
  std::string trace_csv(const std::string& id) const;
  /// Copy of the current state, for inspection.
  Campaign snapshot(const std::string& id) const;

 private:
  struct Entry {
    mutable std::shared_mutex mutex;
    Campaign campaign;
    Journal journal;
    std::uint64_t density_calls = 0;
    std::mutex density_mutex;
    Entry(Campaign c, Journal j) : campaign(std::move(c)), journal(std::move(j)) {}
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  std::string fresh_id() const;
  std::string now() const;
  /// Applies, persists, then commits; state is unchanged if any step throws.
  TellResult commit(Entry& entry, const nlohmann::json& event);

  std::filesystem::path dir_;
  StoreOptions options_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
};

/// Per-dimension prior slices on a grid for previews; discrete priors give
/// normalized weights.
nlohmann::json prior_preview(const nlohmann::json& domain, const nlohmann::json& prior, std::size_t points);
Support domain_from_json(const nlohmann::json& j, const std::string& path = "domain");

}  // namespace priorbo
