// Acceptance driver: one PASS/FAIL line per criterion. Exit 0 iff every
// requested criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "priorbo/campaign.hpp"
#include "priorbo/errors.hpp"
#include "priorbo/harness.hpp"

using namespace priorbo;
using nlohmann::json;

namespace {

struct Options {
  std::size_t seeds = 20;
  bool verbose = false;
  std::string out;  // write every run under this directory when set
};

Options g_opts;

// Solver settings. Criteria without a wall-clock budget use the library
// defaults (m = 500 * D, 10 ascent restarts). The two budgeted criteria cut
// the restarts, and Hartmann also the feature count, to fit on one core.
constexpr int kBudgetRestarts = 2;
constexpr std::size_t kBudgetFeatures6d = 1000;

const KernelMode kGp2dKernel = KernelMode::fixed(1.0, 0.1, 1e-6);

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

void report(const Verdict& v) {
  std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", v.name.c_str(), v.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<std::uint64_t> seed_list() {
  std::vector<std::uint64_t> s(g_opts.seeds);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

void note(const std::string& line) {
  if (g_opts.verbose) std::fprintf(stderr, "  %s\n", line.c_str());
}

// Every trace: SR non-increasing and CR non-decreasing, both non-negative.
bool regrets_monotone(const RunResult& r) {
  for (const auto& t : r.traces) {
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& row = t.rows[i];
      if (!(row.simple_regret >= 0.0) || !(row.cum_regret >= 0.0)) return false;
      if (i == 0) continue;
      if (row.simple_regret > t.rows[i - 1].simple_regret) return false;
      if (row.cum_regret < t.rows[i - 1].cum_regret) return false;
    }
  }
  return true;
}

std::size_t g_monotone_failures = 0;
std::size_t g_traces_checked = 0;

// Seeds run concurrently on every core; results do not depend on it.
RunResult execute(RunConfig config, const Objective& objective, const std::string& label) {
  config.threads = std::max(1u, std::thread::hardware_concurrency());
  const auto start = std::chrono::steady_clock::now();
  RunResult r = run(config, objective);
  const double secs = seconds_since(start);
  g_traces_checked += r.traces.size();
  if (!regrets_monotone(r)) ++g_monotone_failures;
  if (!g_opts.out.empty()) write_run(std::filesystem::path(g_opts.out) / label, r);
  note(label + " " + fmt("%.1fs", secs));
  return r;
}

std::vector<double> sr_at(const RunResult& r, std::size_t iter) {
  std::vector<double> out;
  for (const auto& t : r.traces) out.push_back(r.at(t.seed, iter).simple_regret);
  return out;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

double std_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / double(v.size() - 1) / double(v.size()));
}

json gaussian_prior(const Vector& mean_point, double variance) {
  return {{"type", "truncated_gaussian"},
          {"mean", std::vector<double>(mean_point.data(), mean_point.data() + mean_point.size())},
          {"variance", std::vector<double>(static_cast<std::size_t>(mean_point.size()), variance)}};
}

Objective gp2d(std::uint64_t seed) { return gp_sample_objective(2, seed, Kernel::isotropic(1.0, 0.1, 2)); }

// Point at `distance` from the optimum, heading to the farthest unit-square
// corner (always at least sqrt(2)/2 away, so the segment stays in the box).
Vector offset_from_optimum(const Objective& obj, double distance) {
  const Vector& x = obj.known_optimum->location;
  Vector corner(x.size());
  for (Eigen::Index d = 0; d < x.size(); ++d) corner[d] = x[d] < 0.5 ? 1.0 : 0.0;
  const Vector dir = (corner - x).normalized();
  return x + distance * dir;
}

RunConfig gp2d_config(const std::string& strategy, const json& prior, std::size_t n, bool budgeted) {
  RunConfig c;
  c.objective = "gp2d";
  c.strategy = strategy;
  c.prior = prior;
  c.iterations = 30;
  c.initial_count = 3;
  c.seeds = seed_list();
  c.kernel = kGp2dKernel;
  c.num_samples = n;
  if (budgeted) c.restarts = kBudgetRestarts;
  return c;
}

Verdict synthetic_2d() {
  Verdict v{"synthetic_2d_prior_advantage"};
  const auto start = std::chrono::steady_clock::now();
  std::size_t instances_won = 0, pairs = 0, pairs_won = 0;
  std::ostringstream d;
  for (std::uint64_t inst = 1; inst <= 5; ++inst) {
    const Objective obj = gp2d(inst);
    const json prior = gaussian_prior(offset_from_optimum(obj, 0.1), 1.0 / 16.0);
    const auto ts = execute(gp2d_config("ts", prior, 200, true), obj, "synthetic/" + std::to_string(inst) + "/ts");
    const auto psg = execute(gp2d_config("psg", prior, 200, true), obj, "synthetic/" + std::to_string(inst) + "/psg");
    const auto a = sr_at(psg, 20), b = sr_at(ts, 20);
    if (mean(a) < mean(b)) ++instances_won;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ++pairs;
      if (a[i] < b[i]) ++pairs_won;
    }
    d << "inst" << inst << " psg " << fmt("%.4f", mean(a)) << " ts " << fmt("%.4f", mean(b)) << "; ";
  }
  const double frac = double(pairs_won) / double(pairs);
  const double secs = seconds_since(start);
  v.pass = instances_won >= 4 && frac >= 0.6 && secs < 600.0;
  d << "instances won " << instances_won << "/5, paired wins " << pairs_won << "/" << pairs << ", "
    << fmt("%.0f", secs) << "s of 600s";
  v.detail = d.str();
  return v;
}

Verdict n_insensitivity() {
  Verdict v{"thompson_count_insensitivity"};
  const Objective obj = gp2d(1);
  const json prior = gaussian_prior(offset_from_optimum(obj, 0.1), 1.0 / 16.0);
  const auto ts = execute(gp2d_config("ts", prior, 200, false), obj, "n_insensitivity/ts");
  const double ts20 = mean(sr_at(ts, 20));
  std::vector<double> m30, se30, m20;
  std::ostringstream d;
  for (std::size_t n : {100u, 200u, 500u}) {
    const auto r = execute(gp2d_config("psg", prior, n, false), obj, "n_insensitivity/psg_" + std::to_string(n));
    m30.push_back(mean(sr_at(r, 30)));
    se30.push_back(std_error(sr_at(r, 30)));
    m20.push_back(mean(sr_at(r, 20)));
    d << "N=" << n << " SR30 " << fmt("%.3g", m30.back()) << "+-" << fmt("%.3g", se30.back()) << " SR20 "
      << fmt("%.4f", m20.back()) << "; ";
  }
  bool close = true, beats = true;
  for (std::size_t i = 0; i < 3; ++i) {
    beats = beats && m20[i] < ts20;
    for (std::size_t j = i + 1; j < 3; ++j) {
      const double pooled = std::sqrt(se30[i] * se30[i] + se30[j] * se30[j]);
      close = close && std::abs(m30[i] - m30[j]) <= 2.0 * pooled;
    }
  }
  v.pass = close && beats;
  d << "ts SR20 " << fmt("%.4f", ts20) << "; within 2 pooled SE " << (close ? "yes" : "no") << ", all beat ts "
    << (beats ? "yes" : "no");
  v.detail = d.str();
  return v;
}

Verdict prior_ordering() {
  Verdict v{"prior_location_ordering"};
  const Objective obj = gp2d(2);
  std::vector<std::vector<double>> sr;
  std::ostringstream d;
  const std::vector<std::pair<std::string, double>> levels{{"near", 0.1}, {"mid", 0.35}, {"far", 0.6}};
  for (const auto& [label, dist] : levels) {
    const json prior = gaussian_prior(offset_from_optimum(obj, dist), 1.0 / 16.0);
    sr.push_back(sr_at(execute(gp2d_config("psg", prior, 200, false), obj, "prior_ordering/" + label), 20));
    d << label << " " << fmt("%.4f", mean(sr.back())) << "; ";
  }
  bool ordered = true;
  for (std::size_t k = 0; k + 1 < sr.size(); ++k) {
    std::size_t confirmed = 0;
    for (std::size_t i = 0; i < sr[k].size(); ++i) confirmed += sr[k][i] <= sr[k + 1][i];
    const bool ok = mean(sr[k]) <= mean(sr[k + 1]) && confirmed >= 12 * g_opts.seeds / 20;
    ordered = ordered && ok;
    d << levels[k].first << "<=" << levels[k + 1].first << " in " << confirmed << "/" << sr[k].size() << " seeds; ";
  }
  v.pass = ordered;
  v.detail = d.str();
  return v;
}

Verdict misleading_prior() {
  Verdict v{"misleading_prior_convergence"};
  const Objective obj = toy_1d_objective();
  RunConfig c;
  c.objective = obj.name;
  c.strategy = "psg";
  c.prior = {{"type", "truncated_gaussian"}, {"mean", {5.2}}, {"std", {0.3}}};
  c.iterations = 80;
  c.initial_count = 3;
  c.seeds = seed_list();
  c.kernel = KernelMode::ml2_grid();
  const auto r = execute(c, obj, "misleading_prior/psg");
  std::size_t converged = 0;
  std::vector<double> hit;
  for (const auto& t : r.traces) {
    for (const auto& row : t.rows) {
      if (row.iter >= 1 && row.simple_regret < 0.05) {
        ++converged;
        hit.push_back(double(row.iter));
        break;
      }
    }
  }
  v.pass = converged == r.traces.size();
  v.detail = "prior mean 5.2 std 0.3 vs optimum 2; SR<0.05 within 80 iterations in " + std::to_string(converged) + "/" +
             std::to_string(r.traces.size()) + " seeds" +
             (hit.empty() ? "" : ", slowest at iteration " + fmt("%.0f", *std::max_element(hit.begin(), hit.end())));
  return v;
}

Verdict hartmann() {
  Verdict v{"hartmann6_prior_advantage"};
  const auto start = std::chrono::steady_clock::now();
  const Objective obj = hartmann6_objective();
  const json prior = gaussian_prior((Vector(6) << 0.3, 0.3, 0.6, 0.4, 0.4, 0.75).finished(), 1.0 / 8.0);
  std::map<std::string, double> sr40;
  std::ostringstream d;
  for (const std::string s : {"ts", "prior_random", "psg"}) {
    RunConfig c;
    c.objective = obj.name;
    c.strategy = s;
    c.prior = prior;
    c.iterations = 50;
    c.initial_count = 3;
    c.seeds = seed_list();
    c.kernel = KernelMode::ml2_grid();
    c.num_samples = 600;
    c.feature_count = kBudgetFeatures6d;
    c.restarts = kBudgetRestarts;
    sr40[s] = mean(sr_at(execute(c, obj, "hartmann6/" + s), 40));
    d << s << " SR40 " << fmt("%.4f", sr40[s]) << "; ";
  }
  const double secs = seconds_since(start);
  v.pass = sr40["psg"] <= sr40["ts"] && sr40["psg"] <= sr40["prior_random"] && secs < 1200.0;
  d << fmt("%.0f", secs) << "s of 1200s";
  v.detail = d.str();
  return v;
}

// ---- property suite ----

Matrix random_points(std::size_t n, std::size_t d, Rng& rng) {
  Matrix p(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) p(i, j) = uniform01(rng);
  return p;
}

oracle::Vec vec(const Vector& v) { return oracle::Vec(v.data(), v.data() + v.size()); }

oracle::Mat rows(const Matrix& m) {
  oracle::Mat out(m.rows(), oracle::Vec(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

std::string gp_oracle(bool& ok) {
  Rng rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 50;
    const std::size_t dim = 1 + rng() % 4;
    const double s2 = 0.5 + uniform01(rng);
    Vector ls(dim);
    for (std::size_t j = 0; j < dim; ++j) ls[j] = 0.2 + 0.5 * uniform01(rng);
    const double noise = 1e-3;
    const Matrix p = random_points(n, dim, rng);
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = standard_normal(rng);
    const auto post = fit(Kernel(s2, ls), Dataset(p, y, noise));
    for (int q = 0; q < 5; ++q) {
      const Vector x = random_points(1, dim, rng).row(0).transpose();
      const auto ours = post.predict(x);
      const auto [m, var] = oracle::gp_predict(rows(p), vec(y), noise, s2, vec(ls), vec(x));
      worst = std::max({worst, std::abs(ours.mean - m), std::abs(ours.variance - std::max(var, 0.0))});
    }
  }
  ok = worst <= 1e-8;
  return "gp oracle max err " + fmt("%.2e", worst);
}

std::string rff_mae(bool& ok) {
  Rng rng(1002);
  const Kernel k = Kernel::isotropic(1.0, 0.1, 2);
  const FeatureMap map = FeatureMap::draw(k, 4096, rng);
  double err = 0.0;
  const int pairs = 500;
  for (int i = 0; i < pairs; ++i) {
    const Vector x = random_points(1, 2, rng).row(0).transpose();
    const Vector y = random_points(1, 2, rng).row(0).transpose();
    err += std::abs(map.features(x).dot(map.features(y)) - k(x, y));
  }
  ok = err / pairs < 0.05;
  return "rff mae " + fmt("%.4f", err / pairs);
}

Dataset small_dataset() {
  Matrix p(3, 2);
  p << 0.2, 0.3, 0.7, 0.8, 0.5, 0.1;
  return Dataset(p, (Vector(3) << 0.1, 0.9, -0.4).finished(), 1e-6);
}

StrategyConfig small_config(std::size_t n, std::size_t m, std::uint64_t seed) {
  StrategyConfig c;
  c.num_samples = n;
  c.feature_count = m;
  c.base_seed = seed;
  return c;
}

std::string uniform_weights(bool& ok) {
  const DomainBox box = DomainBox::unit(2);
  ok = true;
  for (std::size_t n : {1u, 7u, 64u}) {
    BoState s{small_dataset(), Kernel::isotropic(1.0, 0.2, 2), box, OptimumPrior::uniform(box),
              small_config(n, 200, 5), 3};
    const auto sug = suggest_psg(s);
    for (double w : sug.cloud->weights) ok = ok && w == 1.0 / double(n);
  }
  return std::string("uniform weights exactly 1/N ") + (ok ? "yes" : "no");
}

std::string scale_invariance(bool& ok) {
  const DomainBox box = DomainBox::unit(2);
  const Vector mu = (Vector(2) << 0.6, 0.4).finished();
  const Vector var = Vector::Constant(2, 0.05);
  ok = true;
  for (std::uint64_t it = 0; it < 10; ++it) {
    BoState a{small_dataset(), Kernel::isotropic(1.0, 0.2, 2), box, OptimumPrior::truncated_gaussian(box, mu, var),
              small_config(50, 200, 9), it};
    BoState b = a;
    b.prior = OptimumPrior(OptimumPrior::TruncatedGaussian{mu, var}, box, 1234.5);
    const auto sa = suggest_psg(a), sb = suggest_psg(b);
    ok = ok && sa.point == sb.point && sa.cloud->weights == sb.cloud->weights;
  }
  return std::string("scale invariance exact ") + (ok ? "yes" : "no");
}

std::string discrete_tv(bool& ok) {
  Matrix c(5, 2);
  c << 0.1, 0.1, 0.3, 0.8, 0.5, 0.5, 0.9, 0.2, 0.7, 0.7;
  const std::vector<double> w{0.5, 1.0, 2.0, 0.25, 3.0};
  const Kernel kernel = Kernel::isotropic(1.0, 0.25, 2);
  const Dataset data = small_dataset();
  const std::size_t n = 8, m = 40;
  BoState state{data, kernel, Support{c}, OptimumPrior::discrete(c, Vector::Map(w.data(), 5)), small_config(n, m, 77),
                0};
  const int runs = 20000;
  std::vector<double> selected(5, 0.0), expected(5, 0.0);
  for (int r = 0; r < runs; ++r) {
    state.iteration = static_cast<std::uint64_t>(r);
    selected[*suggest_psg_discrete(state).candidate_index] += 1.0 / runs;
    // Brute force: redraw the same N functions, weight argmax frequency by the prior.
    const std::uint64_t seed = derive_seed(77, {static_cast<std::uint64_t>(r)});
    std::vector<double> freq(5, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(derive_seed(seed, {i}));
      const FeatureMap map = FeatureMap::draw(kernel, m, rng);
      const SampledFunction f = sample_posterior_function(map, data, rng);
      int best = 0;
      for (int k = 1; k < 5; ++k)
        if (f(c.row(k).transpose()) > f(c.row(best).transpose())) best = k;
      freq[best] += 1.0;
    }
    double total = 0.0;
    for (int k = 0; k < 5; ++k) total += freq[k] * w[k];
    for (int k = 0; k < 5; ++k) expected[k] += freq[k] * w[k] / total / runs;
  }
  double tv = 0.0;
  for (int k = 0; k < 5; ++k) tv += 0.5 * std::abs(selected[k] - expected[k]);
  ok = tv < 0.02;
  return "discrete tv " + fmt("%.4f", tv);
}

std::string small_run_monotonicity(bool& ok) {
  const std::size_t before = g_monotone_failures;
  const Objective toy = toy_1d_objective();
  const Objective spf = spf_table();
  for (const std::string s : {"ts", "psg", "ei", "prior_random"}) {
    RunConfig c;
    c.objective = toy.name;
    c.strategy = s;
    c.iterations = 10;
    c.seeds = {0, 1, 2};
    c.kernel = KernelMode::ml2_grid();
    execute(c, toy, "properties/toy1d_" + s);
    c.objective = spf.name;
    execute(c, spf, "properties/spf_" + s);
  }
  ok = g_monotone_failures == before && g_monotone_failures == 0;
  return "monotone regret on " + std::to_string(g_traces_checked) + " traces so far";
}

std::string journal_replay(bool& ok) {
  const auto dir = std::filesystem::temp_directory_path() / ("priorbo_accept_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  ok = true;
  {
    StoreOptions so;
    int next = 0;
    so.id_source = [&next] { return "c" + std::to_string(next++); };
    so.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
    CampaignStore store(dir, so);
    const std::string id = store.create({{"name", "replay"},
                                         {"domain", {{"type", "box"}, {"lower", {0.0, 0.0}}, {"upper", {1.0, 1.0}}}},
                                         {"prior", gaussian_prior((Vector(2) << 0.4, 0.6).finished(), 0.05)},
                                         {"strategy", "psg"},
                                         {"config", {{"num_samples", 30}, {"feature_count", 200}, {"base_seed", 11}}}});
    std::vector<Vector> asked;
    for (int i = 0; i < 8; ++i) {
      const Suggestion s = store.ask(id);
      asked.push_back(s.point);
      if (i == 3) {
        store.skip(id);
        continue;
      }
      const double y = -(s.point.array() - 0.5).square().sum();
      store.tell(id, {{"input", std::vector<double>(s.point.data(), s.point.data() + 2)}, {"value", y}});
    }
    const Campaign snap = store.snapshot(id);
    for (std::size_t i = 0; i < snap.suggestions().size(); ++i)
      ok = ok && snap.recompute(i).point == asked[i] && snap.suggestions()[i].suggestion.point == asked[i];
    CampaignStore reloaded(dir, so);
    const Campaign again = reloaded.snapshot(id);
    ok = ok && again.to_json() == snap.to_json() && again.compute_ask().point == snap.compute_ask().point;
  }
  std::filesystem::remove_all(dir);
  return std::string("journal replay reproduces every ask ") + (ok ? "yes" : "no");
}

std::string degenerate_fallback(bool& ok) {
  const DomainBox box = DomainBox::unit(1);
  GammaFactor f{2.0, 1.0};
  f.origin = 0.98;
  Matrix p(3, 1);
  p << 0.1, 0.5, 0.9;
  const Dataset d(p, (Vector(3) << 2.0, 0.0, -2.0).finished(), 1e-6);
  BoState state{d, Kernel::isotropic(1.0, 0.3, 1), box, OptimumPrior::gamma_product(box, {f}), small_config(10, 60, 1),
                0};
  const auto s = suggest_psg(state);
  ok = s.prior_miss && s.cloud->degenerate && box.contains(s.point);
  for (double w : s.cloud->weights) ok = ok && w == 0.1;
  return std::string("degenerate fallback in box ") + (ok ? "yes" : "no");
}

Verdict properties() {
  Verdict v{"property_suites"};
  v.pass = true;
  std::ostringstream d;
  for (auto check : {gp_oracle, rff_mae, uniform_weights, scale_invariance, discrete_tv, small_run_monotonicity,
                     journal_replay, degenerate_fallback}) {
    bool ok = false;
    d << check(ok) << (ok ? "" : " [failed]") << "; ";
    v.pass = v.pass && ok;
  }
  v.detail = d.str();
  return v;
}

// The instance-specific numbers of the original study cannot be regenerated;
// confirm the stand-ins the criteria above rely on are in place.
Verdict substitutions() {
  Verdict v{"substituted_reference_numbers"};
  const Objective g = gp2d(1);
  const Objective spf = spf_table();
  const bool optimum_recomputed = g.known_optimum.has_value() && g.box().contains(g.known_optimum->location);
  const bool spf_synthetic = spf.candidates().rows() == 162 && spf.known_optimum.has_value();
  v.pass = optimum_recomputed && spf_synthetic;
  const Vector& x = g.known_optimum->location;
  v.detail = "synthetic 2D minimizer taken from our own instances (gp2d:1 optimum at [" + fmt("%.3f", x[0]) + ", " +
             fmt("%.3f", x[1]) +
             "]); classifier-tuning accuracy plots and measured fibre outcomes replaced by the synthetic criteria "
             "above and the 162-row synthetic fibre table";
  return v;
}

const std::vector<std::pair<std::string, std::function<Verdict()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Verdict()>>> all{
      {"synthetic_2d", synthetic_2d},   {"n_insensitivity", n_insensitivity}, {"prior_ordering", prior_ordering},
      {"misleading_prior", misleading_prior}, {"hartmann6", hartmann},      {"properties", properties},
      {"substitutions", substitutions}};
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"priorbo acceptance checks"};
  std::vector<std::string> names;
  app.add_option("criteria", names, "criteria to run (default: all)");
  app.add_option("--seeds", g_opts.seeds, "seeds per run")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", g_opts.verbose, "per-run timings on stderr");
  app.add_option("--out", g_opts.out, "write every run under this directory");
  CLI11_PARSE(app, argc, argv);

  if (names.empty())
    for (const auto& [n, _] : criteria()) names.push_back(n);
  bool all_pass = true;
  for (const auto& name : names) {
    const auto it = std::find_if(criteria().begin(), criteria().end(), [&](const auto& c) { return c.first == name; });
    if (it == criteria().end()) {
      std::fprintf(stderr, "unknown criterion %s\n", name.c_str());
      return 2;
    }
    Verdict v;
    try {
      v = it->second();
    } catch (const std::exception& e) {
      v = {name, false, std::string("error: ") + e.what()};
    }
    report(v);
    all_pass = all_pass && v.pass;
  }
  return all_pass ? 0 : 1;
}
