#include "priorbo/campaign.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include "priorbo/errors.hpp"
#include "priorbo/prior_json.hpp"

namespace priorbo {

using nlohmann::json;

namespace {

json vec_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vec_from(const json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path, "must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(path + "[" + std::to_string(i) + "]", "must be a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

std::vector<std::string> strings_from(const json& j, const std::string& path, std::size_t expected) {
  if (!j.is_array()) throw ValidationError(path, "must be an array of strings");
  if (j.size() != expected) throw ValidationError(path, "needs " + std::to_string(expected) + " entries");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) throw ValidationError(path + "[" + std::to_string(i) + "]", "must be a string");
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

bool nonneg_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::size_t count_field(const json& j, const char* key, const std::string& path, std::size_t fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!nonneg_integer(j.at(key))) throw ValidationError(path + "." + key, "must be a nonnegative integer");
  return j.at(key).get<std::size_t>();
}

std::optional<std::size_t> matching_row(const Matrix& candidates, const Vector& x) {
  if (x.size() != candidates.cols()) return std::nullopt;
  for (Eigen::Index i = 0; i < candidates.rows(); ++i)
    if (candidates.row(i).transpose() == x) return static_cast<std::size_t>(i);
  return std::nullopt;
}

const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(path + "." + key, "missing");
  return j.at(key);
}

std::string string_field(const json& j, const char* key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_string()) throw ValidationError(path + "." + key, "must be a string");
  return v.get<std::string>();
}

std::optional<std::size_t> optional_index(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!nonneg_integer(j.at(key))) throw ValidationError(path + "." + key, "must be a nonnegative integer");
  return j.at(key).get<std::size_t>();
}

Suggestion suggestion_from_json(const json& j, const std::string& path) {
  Suggestion s;
  s.point = vec_from(field(j, "point", path), path + ".point");
  s.candidate_index = optional_index(j, "candidate_index", path);
  s.strategy = string_field(j, "strategy", path);
  const json& seed = field(j, "seed_used", path);
  if (!nonneg_integer(seed)) throw ValidationError(path + ".seed_used", "must be an unsigned integer");
  s.seed_used = seed.get<std::uint64_t>();
  s.prior_miss = j.value("prior_miss", false);
  if (j.contains("cloud") && j.at("cloud").is_array()) {
    MaximizerCloud cloud;
    const json& c = j.at("cloud");
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::string p = path + ".cloud[" + std::to_string(i) + "]";
      cloud.points.push_back(vec_from(field(c[i], "point", p), p + ".point"));
      const json& w = field(c[i], "weight", p);
      if (!w.is_number()) throw ValidationError(p + ".weight", "must be a number");
      cloud.weights.push_back(w.get<double>());
      if (const auto idx = optional_index(c[i], "candidate_index", p)) cloud.indices.push_back(*idx);
    }
    cloud.degenerate = j.value("degenerate", false);
    s.cloud = std::move(cloud);
  }
  if (j.contains("candidate_probabilities") && !j.at("candidate_probabilities").is_null()) {
    const Vector p = vec_from(j.at("candidate_probabilities"), path + ".candidate_probabilities");
    s.candidate_probabilities = std::vector<double>(p.data(), p.data() + p.size());
  }
  return s;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string random_id() {
  std::random_device rd;
  const std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) return false;
  return true;
}

}  // namespace

Support domain_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "must be an object");
  const std::string type = j.value("type", std::string());
  if (type == "box") {
    const Vector lo = vec_from(field(j, "lower", path), path + ".lower");
    const Vector hi = vec_from(field(j, "upper", path), path + ".upper");
    try {
      return DomainBox(lo, hi);
    } catch (const InputError& e) {
      throw ValidationError(path, e.what());
    }
  }
  if (type == "candidates") {
    const json& rows = field(j, "candidates", path);
    if (!rows.is_array() || rows.empty()) throw ValidationError(path + ".candidates", "must be a non-empty array of rows");
    Matrix m;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string p = path + ".candidates[" + std::to_string(i) + "]";
      const Vector r = vec_from(rows[i], p);
      if (i == 0) {
        if (r.size() == 0) throw ValidationError(p, "must not be empty");
        m.resize(static_cast<Eigen::Index>(rows.size()), r.size());
      } else if (r.size() != m.cols()) {
        throw ValidationError(p, "has " + std::to_string(r.size()) + " entries, expected " + std::to_string(m.cols()));
      }
      if (!r.allFinite()) throw ValidationError(p, "entries must be finite");
      m.row(static_cast<Eigen::Index>(i)) = r.transpose();
    }
    return m;
  }
  throw ValidationError(path + ".type", "must be \"box\" or \"candidates\"");
}

std::size_t CampaignSpec::dim() const {
  if (const auto* b = std::get_if<DomainBox>(&domain)) return b->dim();
  return static_cast<std::size_t>(std::get<Matrix>(domain).cols());
}

OptimumPrior CampaignSpec::make_prior() const { return prior_from_json(prior, domain, "prior"); }

CampaignSpec CampaignSpec::from_json(const json& j, std::size_t default_n, std::size_t default_m) {
  if (!j.is_object()) throw ValidationError("", "campaign spec must be an object");
  CampaignSpec s;
  s.name = string_field(j, "name", "spec");
  if (s.name.empty()) throw ValidationError("name", "must not be empty");
  s.domain = domain_from_json(field(j, "domain", "spec"));
  const json& d = j.at("domain");
  if (d.contains("names")) s.names = strings_from(d.at("names"), "domain.names", s.dim());
  if (d.contains("units")) s.units = strings_from(d.at("units"), "domain.units", s.dim());
  if (j.contains("prior")) s.prior = j.at("prior");
  s.make_prior();
  if (j.contains("strategy")) {
    if (!j.at("strategy").is_string()) throw ValidationError("strategy", "must be a string");
    s.strategy = j.at("strategy").get<std::string>();
  }
  try {
    parse_strategy(s.strategy);
  } catch (const ConfigError& e) {
    throw ValidationError("strategy", e.what());
  }
  const json cfg = j.value("config", json::object());
  if (!cfg.is_object()) throw ValidationError("config", "must be an object");
  s.config.num_samples = count_field(cfg, "num_samples", "config", 0);
  s.config.feature_count = count_field(cfg, "feature_count", "config", 0);
  if (s.config.num_samples == 0) s.config.num_samples = default_n;
  if (s.config.feature_count == 0) s.config.feature_count = default_m;
  if (cfg.contains("restarts")) {
    const std::size_t r = count_field(cfg, "restarts", "config", 10);
    if (r < 1) throw ValidationError("config.restarts", "must be at least 1");
    s.config.maximize.restarts = static_cast<int>(r);
  }
  if (cfg.contains("base_seed")) {
    if (!nonneg_integer(cfg.at("base_seed"))) throw ValidationError("config.base_seed", "must be an unsigned integer");
    s.config.base_seed = cfg.at("base_seed").get<std::uint64_t>();
  }
  if (cfg.contains("kernel")) s.kernel = kernel_mode_from_json(cfg.at("kernel"), "config.kernel");
  if (s.kernel.kind == KernelMode::Kind::kFixed &&
      !(s.kernel.signal_variance > 0.0 && s.kernel.lengthscale > 0.0 && s.kernel.noise_variance >= 0.0))
    throw ValidationError("config.kernel", "fixed parameters must be positive");
  const std::string sense = j.value("sense", std::string("maximize"));
  if (sense == "minimize") {
    s.sense = Sense::kMinimize;
  } else if (sense != "maximize") {
    throw ValidationError("sense", "must be \"maximize\" or \"minimize\"");
  }
  return s;
}

json CampaignSpec::to_json() const {
  json d;
  if (const auto* b = std::get_if<DomainBox>(&domain)) {
    d = {{"type", "box"}, {"lower", vec_json(b->lower())}, {"upper", vec_json(b->upper())}};
  } else {
    const Matrix& m = std::get<Matrix>(domain);
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
    d = {{"type", "candidates"}, {"candidates", std::move(rows)}};
  }
  if (!names.empty()) d["names"] = names;
  if (!units.empty()) d["units"] = units;
  return {{"name", name},
          {"domain", std::move(d)},
          {"prior", prior},
          {"strategy", strategy},
          {"config",
           {{"num_samples", config.num_samples},
            {"feature_count", config.feature_count},
            {"restarts", config.maximize.restarts},
            {"base_seed", config.base_seed},
            {"kernel", kernel_mode_to_json(kernel)}}},
          {"sense", sense == Sense::kMinimize ? "minimize" : "maximize"}};
}

std::string_view to_string(SuggestionStatus s) noexcept {
  switch (s) {
    case SuggestionStatus::kPending: return "pending";
    case SuggestionStatus::kTold: return "told";
    case SuggestionStatus::kSkipped: return "skipped";
  }
  return "pending";
}

json cloud_to_json(const MaximizerCloud& cloud) {
  json out = json::array();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    json p = {{"point", vec_json(cloud.points[i])}, {"weight", cloud.weights[i]}};
    if (!cloud.indices.empty()) p["candidate_index"] = cloud.indices[i];
    out.push_back(std::move(p));
  }
  return out;
}

json suggestion_to_json(const Suggestion& s) {
  json j = {{"point", vec_json(s.point)},
            {"candidate_index", s.candidate_index ? json(*s.candidate_index) : json(nullptr)},
            {"strategy", s.strategy},
            {"seed_used", s.seed_used},
            {"prior_miss", s.prior_miss},
            {"cloud", s.cloud ? cloud_to_json(*s.cloud) : json::array()}};
  if (s.cloud) j["degenerate"] = s.cloud->degenerate;
  if (s.candidate_probabilities) j["candidate_probabilities"] = *s.candidate_probabilities;
  return j;
}

json create_event(const std::string& id, const std::string& created_at, const CampaignSpec& spec) {
  return {{"type", "create"}, {"id", id}, {"created_at", created_at}, {"spec", spec.to_json()}};
}

json ask_event(const Suggestion& s, const std::string& timestamp) {
  return {{"type", "ask"}, {"timestamp", timestamp}, {"suggestion", suggestion_to_json(s)}};
}

json tell_event(const std::optional<Vector>& input, std::optional<std::size_t> candidate_index, double value,
                const std::string& note, const std::string& timestamp) {
  return {{"type", "tell"},
          {"timestamp", timestamp},
          {"input", input ? vec_json(*input) : json(nullptr)},
          {"candidate_index", candidate_index ? json(*candidate_index) : json(nullptr)},
          {"value", value},
          {"note", note}};
}

Campaign Campaign::replay(const std::vector<json>& events) {
  if (events.empty()) throw ValidationError("events", "must start with a create event");
  Campaign c;
  for (std::size_t i = 0; i < events.size(); ++i) {
    try {
      c.apply(events[i]);
    } catch (const ValidationError& e) {
      throw ValidationError("events[" + std::to_string(i) + "]" + (e.field().empty() ? "" : "." + e.field()),
                            e.message());
    } catch (const Error& e) {
      throw ValidationError("events[" + std::to_string(i) + "]", e.what());
    }
  }
  return c;
}

std::optional<std::size_t> Campaign::pending() const {
  for (std::size_t i = suggestions_.size(); i-- > 0;)
    if (suggestions_[i].status == SuggestionStatus::kPending) return i;
  return std::nullopt;
}

std::optional<std::size_t> Campaign::best() const {
  std::optional<std::size_t> out;
  const double sign = spec_.sense == Sense::kMinimize ? -1.0 : 1.0;
  for (std::size_t i = 0; i < observations_.size(); ++i)
    if (!out || sign * observations_[i].value > sign * observations_[*out].value) out = i;
  return out;
}

TellResult Campaign::apply(const json& event) {
  if (!event.is_object()) throw ValidationError("event", "must be an object");
  const std::string type = string_field(event, "type", "event");
  const std::string timestamp = event.value("timestamp", std::string());
  TellResult result;

  if (type == "create") {
    if (!id_.empty()) throw ValidationError("type", "campaign already created");
    const std::string id = string_field(event, "id", "event");
    if (!valid_id(id)) throw ValidationError("id", "must be 1-64 characters of [A-Za-z0-9_-]");
    CampaignSpec spec = CampaignSpec::from_json(field(event, "spec", "event"));
    id_ = id;
    created_at_ = event.value("created_at", std::string());
    spec_ = std::move(spec);
    events_.push_back(event);
    return result;
  }
  if (id_.empty()) throw ValidationError("type", "first event must be create");

  if (type == "ask") {
    if (archived_) throw CampaignArchived("campaign " + id_ + " is archived");
    if (const auto p = pending()) throw PendingSuggestionExists("suggestion " + std::to_string(*p) + " is still pending");
    Suggestion s = suggestion_from_json(field(event, "suggestion", "event"), "suggestion");
    if (static_cast<std::size_t>(s.point.size()) != spec_.dim())
      throw ValidationError("suggestion.point", "has the wrong dimension");
    if (const auto* box = std::get_if<DomainBox>(&spec_.domain)) {
      if (!box->contains(s.point)) throw OutOfDomain("suggested point lies outside the box");
    } else {
      const Matrix& c = std::get<Matrix>(spec_.domain);
      if (!s.candidate_index || *s.candidate_index >= static_cast<std::size_t>(c.rows()) ||
          c.row(static_cast<Eigen::Index>(*s.candidate_index)).transpose() != s.point)
        throw OutOfDomain("suggestion does not name a candidate row");
    }
    suggestions_.push_back({std::move(s), SuggestionStatus::kPending, observations_.size(), timestamp});
    events_.push_back(event);
    return result;
  }

  if (type == "tell") {
    if (archived_) throw CampaignArchived("campaign " + id_ + " is archived");
    CampaignObservation obs;
    obs.timestamp = timestamp;
    if (event.contains("note") && !event.at("note").is_null()) {
      if (!event.at("note").is_string()) throw ValidationError("note", "must be a string");
      obs.note = event.at("note").get<std::string>();
    }
    const json& value = field(event, "value", "event");
    if (value.is_null()) throw NonFiniteValue("value must be a finite number");
    if (!value.is_number()) throw ValidationError("value", "must be a number");
    obs.value = value.get<double>();
    if (!std::isfinite(obs.value)) throw NonFiniteValue("value must be a finite number");

    const auto index = optional_index(event, "candidate_index", "event");
    const bool has_input = event.contains("input") && !event.at("input").is_null();
    if (const auto* box = std::get_if<DomainBox>(&spec_.domain)) {
      if (index) throw ValidationError("candidate_index", "only valid for candidate domains");
      if (!has_input) throw ValidationError("input", "missing");
      obs.input = vec_from(event.at("input"), "input");
      if (static_cast<std::size_t>(obs.input.size()) != box->dim())
        throw ValidationError("input", "needs " + std::to_string(box->dim()) + " entries");
      if (!obs.input.allFinite() || !box->contains(obs.input)) throw OutOfDomain("input lies outside the box");
    } else {
      const Matrix& c = std::get<Matrix>(spec_.domain);
      if (index) {
        if (*index >= static_cast<std::size_t>(c.rows())) throw OutOfDomain("candidate_index out of range");
        obs.candidate_index = index;
        obs.input = c.row(static_cast<Eigen::Index>(*index)).transpose();
        if (has_input && vec_from(event.at("input"), "input") != obs.input)
          throw ValidationError("input", "does not match candidate_index");
      } else {
        if (!has_input) throw ValidationError("input", "missing (give input or candidate_index)");
        obs.input = vec_from(event.at("input"), "input");
        obs.candidate_index = matching_row(c, obs.input);
        if (!obs.candidate_index) throw OutOfDomain("input is not a candidate row");
      }
    }
    if (const auto p = pending()) {
      const Suggestion& s = suggestions_[*p].suggestion;
      const bool match = obs.candidate_index ? s.candidate_index == obs.candidate_index : s.point == obs.input;
      if (match) {
        obs.resolves = *p;
        result.resolved = *p;
      } else {
        result.pending_unmatched = true;
      }
    }
    if (obs.resolves) suggestions_[*obs.resolves].status = SuggestionStatus::kTold;
    result.observation_index = observations_.size();
    observations_.push_back(std::move(obs));
    events_.push_back(event);
    return result;
  }

  if (type == "skip") {
    if (archived_) throw CampaignArchived("campaign " + id_ + " is archived");
    const auto p = pending();
    if (!p) throw Conflict("no pending suggestion to skip");
    suggestions_[*p].status = SuggestionStatus::kSkipped;
    events_.push_back(event);
    return result;
  }

  if (type == "archive") {
    if (archived_) throw CampaignArchived("campaign " + id_ + " is already archived");
    archived_ = true;
    events_.push_back(event);
    return result;
  }
  throw ValidationError("type", "unknown event type \"" + type + "\"");
}

BoState Campaign::state() const {
  const auto n = static_cast<Eigen::Index>(observations_.size());
  const auto d = static_cast<Eigen::Index>(spec_.dim());
  Matrix points(n, d);
  Vector values(n);
  const double sign = spec_.sense == Sense::kMinimize ? -1.0 : 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    points.row(i) = observations_[static_cast<std::size_t>(i)].input.transpose();
    values[i] = sign * observations_[static_cast<std::size_t>(i)].value;
  }
  Dataset data(std::move(points), std::move(values), 0.0);
  const auto hp = resolve_kernel(spec_.kernel, data, spec_.domain);
  data.noise_variance = hp.noise_variance;
  return BoState{std::move(data), hp.kernel, spec_.domain, spec_.make_prior(), spec_.config, suggestions_.size()};
}

Suggestion Campaign::compute_ask() const {
  if (archived_) throw CampaignArchived("campaign " + id_ + " is archived");
  if (const auto p = pending()) throw PendingSuggestionExists("suggestion " + std::to_string(*p) + " is still pending");
  return suggest(parse_strategy(spec_.strategy), state());
}

Suggestion Campaign::recompute(std::size_t suggestion_index) const {
  if (suggestion_index >= suggestions_.size()) throw NotFound("no suggestion " + std::to_string(suggestion_index));
  std::size_t asks = 0;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (events_[i].at("type") != "ask") continue;
    if (asks++ == suggestion_index) {
      const Campaign prefix = replay(std::vector<json>(events_.begin(), events_.begin() + static_cast<std::ptrdiff_t>(i)));
      return prefix.compute_ask();
    }
  }
  throw NotFound("no ask event for suggestion " + std::to_string(suggestion_index));
}

MaximizerCloud Campaign::density(std::size_t count, std::uint64_t seed) const {
  if (count == 0) throw ValidationError("n", "must be at least 1");
  return optimum_density_cloud(state(), count, seed);
}

json Campaign::summary() const {
  json out = {{"id", id_},
              {"name", spec_.name},
              {"created_at", created_at_},
              {"status", archived_ ? "archived" : "active"},
              {"observations", observations_.size()},
              {"suggestions", suggestions_.size()}};
  const auto p = pending();
  out["pending"] = p ? json(*p) : json(nullptr);
  if (const auto b = best()) {
    out["best"] = {{"index", *b}, {"input", vec_json(observations_[*b].input)}, {"value", observations_[*b].value}};
  } else {
    out["best"] = nullptr;
  }
  return out;
}

json Campaign::to_json(bool include_clouds) const {
  json out = summary();
  out["spec"] = spec_.to_json();
  json obs = json::array();
  for (const auto& o : observations_) {
    obs.push_back({{"input", vec_json(o.input)},
                   {"candidate_index", o.candidate_index ? json(*o.candidate_index) : json(nullptr)},
                   {"value", o.value},
                   {"timestamp", o.timestamp},
                   {"note", o.note},
                   {"resolves", o.resolves ? json(*o.resolves) : json(nullptr)}});
  }
  out["observation_log"] = std::move(obs);
  json sugg = json::array();
  for (const auto& r : suggestions_) {
    json s = suggestion_to_json(r.suggestion);
    if (!include_clouds) s.erase("cloud");
    s["status"] = to_string(r.status);
    s["observations_at_ask"] = r.observations_at_ask;
    s["timestamp"] = r.timestamp;
    sugg.push_back(std::move(s));
  }
  out["suggestion_log"] = std::move(sugg);
  return out;
}

void Campaign::write_trace_csv(std::ostream& out) const {
  RunResult r;
  r.objective_name = spec_.name;
  r.dim = spec_.dim();
  SeedTrace t;
  t.seed = spec_.config.base_seed;
  const double sign = spec_.sense == Sense::kMinimize ? -1.0 : 1.0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    TraceRow row;
    row.seed = t.seed;
    row.iter = i + 1;
    row.x = observations_[i].input;
    row.y = row.f = observations_[i].value;
    best = std::max(best, sign * row.y);
    row.best = sign * best;
    row.simple_regret = row.cum_regret = std::numeric_limits<double>::quiet_NaN();
    t.rows.push_back(std::move(row));
  }
  r.traces.push_back(std::move(t));
  priorbo::write_trace_csv(out, r);
}

// Journal ---------------------------------------------------------------

std::vector<json> Journal::load() {
  std::ifstream f(path_, std::ios::binary);
  if (!f) throw NotFound("cannot open journal " + path_.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  f.close();

  std::vector<json> events;
  std::size_t start = 0;
  std::size_t line = 0;
  while (true) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) break;
    ++line;
    const std::string_view body(text.data() + start, nl - start);
    if (!body.empty()) {
      try {
        events.push_back(json::parse(body));
      } catch (const json::parse_error&) {
        throw ValidationError(path_.string(), "line " + std::to_string(line) + " is not valid JSON");
      }
    }
    start = nl + 1;
  }
  if (start < text.size()) std::filesystem::resize_file(path_, start);  // torn tail
  return events;
}

void Journal::append(const json& event) {
  const std::string line = event.dump() + "\n";
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw NumericFailure("journal open failed: " + std::string(std::strerror(errno)));
  std::size_t done = 0;
  while (done < line.size()) {
    const ssize_t w = ::write(fd, line.data() + done, line.size() - done);
    if (w < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw NumericFailure("journal write failed: " + std::string(std::strerror(err)));
    }
    done += static_cast<std::size_t>(w);
  }
  const int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) throw NumericFailure("journal fsync failed");
}

namespace {

void write_journal_atomically(const std::filesystem::path& path, const std::vector<json>& events) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  std::filesystem::remove(tmp);
  Journal j(tmp);
  for (const auto& e : events) j.append(e);
  std::filesystem::rename(tmp, path);
}

}  // namespace

// Store -----------------------------------------------------------------

CampaignStore::CampaignStore(std::filesystem::path data_dir, StoreOptions options)
    : dir_(std::move(data_dir)), options_(std::move(options)) {
  std::filesystem::create_directories(dir_);
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() != ".jsonl") continue;
    Journal journal(entry.path());
    auto events = journal.load();
    if (events.empty()) continue;
    Campaign c = Campaign::replay(events);
    if (entry.path().stem().string() != c.id())
      throw ValidationError(entry.path().string(), "journal id does not match its file name");
    std::string id = c.id();
    entries_.emplace(std::move(id), std::make_shared<Entry>(std::move(c), std::move(journal)));
  }
}

std::string CampaignStore::now() const { return options_.clock ? options_.clock() : utc_now(); }

std::string CampaignStore::fresh_id() const {
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::string id = options_.id_source ? options_.id_source() : random_id();
    if (!entries_.count(id) && !std::filesystem::exists(dir_ / (id + ".jsonl"))) return id;
  }
  throw Conflict("could not allocate a fresh campaign id");
}

std::shared_ptr<CampaignStore::Entry> CampaignStore::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(id);
  if (it == entries_.end()) throw NotFound("no campaign " + id);
  return it->second;
}

TellResult CampaignStore::commit(Entry& entry, const json& event) {
  Campaign next = entry.campaign;
  const TellResult r = next.apply(event);
  entry.journal.append(event);
  entry.campaign = std::move(next);
  return r;
}

std::string CampaignStore::create(const json& spec_json) {
  const CampaignSpec spec =
      CampaignSpec::from_json(spec_json, options_.default_num_samples, options_.default_feature_count);
  std::unique_lock lock(mutex_);
  const std::string id = fresh_id();
  const json event = create_event(id, now(), spec);
  Campaign c;
  c.apply(event);
  Journal journal(dir_ / (id + ".jsonl"));
  write_journal_atomically(journal.path(), {event});
  entries_.emplace(id, std::make_shared<Entry>(std::move(c), std::move(journal)));
  return id;
}

std::vector<json> CampaignStore::list() const {
  std::vector<std::shared_ptr<Entry>> all;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [id, e] : entries_) all.push_back(e);
  }
  std::vector<json> out;
  for (const auto& e : all) {
    std::shared_lock lock(e->mutex);
    out.push_back(e->campaign.summary());
  }
  return out;
}

json CampaignStore::get(const std::string& id) const {
  auto e = find(id);
  std::shared_lock lock(e->mutex);
  return e->campaign.to_json();
}

Campaign CampaignStore::snapshot(const std::string& id) const {
  auto e = find(id);
  std::shared_lock lock(e->mutex);
  return e->campaign;
}

Suggestion CampaignStore::ask(const std::string& id) {
  auto e = find(id);
  std::unique_lock lock(e->mutex);
  Suggestion s = e->campaign.compute_ask();
  commit(*e, ask_event(s, now()));
  return s;
}

json CampaignStore::tell(const std::string& id, const json& body) {
  if (!body.is_object()) throw ValidationError("", "tell body must be an object");
  std::optional<Vector> input;
  if (body.contains("input") && !body.at("input").is_null()) input = vec_from(body.at("input"), "input");
  const auto index = optional_index(body, "candidate_index", "body");
  if (!body.contains("value")) throw ValidationError("value", "missing");
  const json& v = body.at("value");
  double value = 0.0;
  if (v.is_number()) {
    value = v.get<double>();
  } else if (v.is_null()) {
    throw NonFiniteValue("value must be a finite number");
  } else if (v.is_string()) {
    const std::string text = v.get<std::string>();
    char* end = nullptr;
    const double parsed = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') throw ValidationError("value", "must be a number");
    if (!std::isfinite(parsed)) throw NonFiniteValue("value must be a finite number");
    value = parsed;
  } else {
    throw ValidationError("value", "must be a number");
  }
  if (!std::isfinite(value)) throw NonFiniteValue("value must be a finite number");
  std::string note;
  if (body.contains("note") && !body.at("note").is_null()) {
    if (!body.at("note").is_string()) throw ValidationError("note", "must be a string");
    note = body.at("note").get<std::string>();
  }

  auto e = find(id);
  std::unique_lock lock(e->mutex);
  const TellResult r = commit(*e, tell_event(input, index, value, note, now()));
  json out = e->campaign.summary();
  out["observation_index"] = r.observation_index;
  out["resolved"] = r.resolved ? json(*r.resolved) : json(nullptr);
  out["warning"] = r.pending_unmatched ? json("input does not match the pending suggestion; it stays pending")
                                       : json(nullptr);
  return out;
}

json CampaignStore::skip(const std::string& id) {
  auto e = find(id);
  std::unique_lock lock(e->mutex);
  commit(*e, {{"type", "skip"}, {"timestamp", now()}});
  return e->campaign.summary();
}

json CampaignStore::archive(const std::string& id) {
  auto e = find(id);
  std::unique_lock lock(e->mutex);
  commit(*e, {{"type", "archive"}, {"timestamp", now()}});
  return e->campaign.summary();
}

MaximizerCloud CampaignStore::density(const std::string& id, std::size_t count, std::optional<std::uint64_t> seed,
                                      std::uint64_t* seed_used) {
  auto e = find(id);
  std::shared_lock lock(e->mutex);
  if (!seed) {
    std::lock_guard counter(e->density_mutex);
    seed = derive_seed(e->campaign.spec().config.base_seed, Stream::kDensity, e->density_calls++);
  }
  if (seed_used != nullptr) *seed_used = *seed;
  return e->campaign.density(count, *seed);
}

json CampaignStore::export_campaign(const std::string& id) const {
  auto e = find(id);
  std::shared_lock lock(e->mutex);
  return {{"format", "priorbo-campaign"}, {"version", 1}, {"id", id}, {"events", e->campaign.events()}};
}

std::string CampaignStore::import_campaign(const json& doc) {
  if (!doc.is_object()) throw ValidationError("", "import document must be an object");
  if (doc.value("format", std::string()) != "priorbo-campaign") throw ValidationError("format", "must be \"priorbo-campaign\"");
  if (doc.value("version", 0) != 1) throw ValidationError("version", "unsupported version");
  const json& ev = field(doc, "events", "document");
  if (!ev.is_array()) throw ValidationError("events", "must be an array");
  std::vector<json> events(ev.begin(), ev.end());
  Campaign c = Campaign::replay(events);
  if (doc.contains("id") && doc.at("id") != c.id()) throw ValidationError("id", "does not match the create event");

  std::unique_lock lock(mutex_);
  if (entries_.count(c.id()) || std::filesystem::exists(dir_ / (c.id() + ".jsonl")))
    throw Conflict("campaign " + c.id() + " already exists");
  Journal journal(dir_ / (c.id() + ".jsonl"));
  write_journal_atomically(journal.path(), events);
  const std::string id = c.id();
  entries_.emplace(id, std::make_shared<Entry>(std::move(c), std::move(journal)));
  return id;
}

std::string CampaignStore::trace_csv(const std::string& id) const {
  auto e = find(id);
  std::shared_lock lock(e->mutex);
  std::ostringstream out;
  e->campaign.write_trace_csv(out);
  return out.str();
}

// Prior preview ---------------------------------------------------------

json prior_preview(const json& domain_json, const json& prior_json, std::size_t points) {
  if (points < 2 || points > 10000) throw ValidationError("points", "must be between 2 and 10000");
  const Support domain = domain_from_json(domain_json);
  const OptimumPrior prior = prior_from_json(prior_json, domain, "prior");
  if (const auto* c = std::get_if<Matrix>(&domain)) {
    std::vector<double> logs;
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < c->rows(); ++i) {
      logs.push_back(prior.log_density_shape(static_cast<std::size_t>(i)));
      top = std::max(top, logs.back());
    }
    std::vector<double> w(logs.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < logs.size(); ++i) total += (w[i] = std::isfinite(top) ? std::exp(logs[i] - top) : 0.0);
    for (double& x : w) x = total > 0.0 ? x / total : 0.0;
    return {{"type", "discrete"}, {"weights", w}};
  }
  const DomainBox& box = std::get<DomainBox>(domain);
  Rng rng(0);
  const Vector reference = prior.sample(rng);
  json dims = json::array();
  for (std::size_t d = 0; d < box.dim(); ++d) {
    const auto di = static_cast<Eigen::Index>(d);
    std::vector<double> grid(points), dens(points);
    Vector x = reference;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < points; ++k) {
      grid[k] = box.lower()[di] + (box.upper()[di] - box.lower()[di]) * static_cast<double>(k) / static_cast<double>(points - 1);
      x[di] = grid[k];
      dens[k] = prior.log_density_shape(x);
      top = std::max(top, dens[k]);
    }
    double area = 0.0;
    for (std::size_t k = 0; k < points; ++k) dens[k] = std::isfinite(top) ? std::exp(dens[k] - top) : 0.0;
    for (std::size_t k = 1; k < points; ++k) area += 0.5 * (dens[k] + dens[k - 1]) * (grid[k] - grid[k - 1]);
    if (area > 0.0)
      for (double& v : dens) v /= area;
    dims.push_back({{"grid", grid}, {"density", dens}});
  }
  return {{"type", "continuous"}, {"dimensions", std::move(dims)}};
}

}  // namespace priorbo
