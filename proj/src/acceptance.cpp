#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "json.hpp"

#include "fpp/campaign.hpp"
#include "fpp/errors.hpp"
#include "fpp/io.hpp"
#include "fpp/parallel.hpp"
#include "fpp/seeding.hpp"
#include "runner.hpp"

namespace fpp {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

bool AcceptanceReport::all_passed() const {
  return !criteria.empty() &&
         std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& c) { return c.passed; });
}

std::string format_criterion(const CriterionResult& c) {
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.1f", c.seconds);
  std::string line = std::string(c.passed ? "[PASS]" : "[FAIL]") + " C" + std::to_string(c.id) + " " + c.name +
                     ": " + c.detail + " (" + secs + "s";
  if (c.budget_seconds > 0.0) {
    char b[32];
    std::snprintf(b, sizeof b, "%.0f", c.budget_seconds);
    line += " of " + std::string(b) + "s";
  }
  return line + ")";
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string g(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

struct Pass {
  std::vector<CriterionResult> criteria;
  ordered_json data = ordered_json::object();
};

CriterionResult oracle_fuzz(const ExperimentConfig& cfg, ordered_json& data) {
  CriterionResult c{1, "oracle equivalence", false, "", 0.0, 30.0};
  Engine rng(derive_seed(cfg.master_seed, stream_key("acceptance/oracle")));
  std::size_t mismatches = 0, uncertified = 0;
  double worst = 0.0;
  GeodesicOptions opts;
  opts.exact_threshold = 0;  // force the cutoff-doubling search
  for (std::size_t i = 0; i < cfg.fuzz_instances; ++i) {
    const auto count = 1 + static_cast<std::size_t>(uniform01(rng) * 12.0) % 12;
    const double side = 1.0 + 4.0 * uniform01(rng);
    const BoxRegion box(Vec{0.0, 0.0}, Vec{side, side});
    std::vector<double> coords;
    for (std::size_t k = 0; k < 2 * count; ++k) coords.push_back(side * uniform01(rng));
    const PoissonSample sample(box, 1.0, i, coords);
    const Vec x{side * uniform01(rng), side * uniform01(rng)};
    const Vec y{side * uniform01(rng), side * uniform01(rng)};
    const AlphaParam alpha(i % 2 == 0 ? 1.5 : 2.0);
    const SpatialGrid grid(sample, 1.0);
    const auto fast = passage_time(grid, x, y, alpha, opts);
    std::vector<Vec> pts;
    for (std::size_t k = 0; k < sample.size(); ++k) pts.push_back(sample.point_vec(k));
    const auto oracle = brute_force_passage_time(pts, x, y, alpha);
    uncertified += !fast.certified;
    const double err = std::abs(fast.cost - oracle.cost) / std::max(oracle.cost, 1e-300);
    if (oracle.cost == 0.0 ? fast.cost != 0.0 : err > 1e-12) ++mismatches;
    if (oracle.cost > 0.0) worst = std::max(worst, err);
  }
  c.passed = mismatches == 0 && uncertified == 0;
  c.detail = std::to_string(cfg.fuzz_instances) + " instances, mismatches=" + std::to_string(mismatches) +
             ", uncertified=" + std::to_string(uncertified) + ", max rel err=" + g(worst);
  data["oracle"] = {{"instances", cfg.fuzz_instances}, {"mismatches", mismatches},
                    {"uncertified", uncertified},      {"max_relative_error", worst}};
  return c;
}

CriterionResult subadditivity(const ExperimentConfig& cfg, ordered_json& data) {
  CriterionResult c{2, "subadditivity and symmetry", false, "", 0.0, 0.0};
  const std::size_t configs = std::min<std::size_t>(100, cfg.triples);
  const std::uint64_t stream = derive_seed(cfg.master_seed, stream_key("acceptance/subadditivity"));
  const AlphaParam alpha(cfg.alpha);
  const int d = cfg.dimension;
  const BoxRegion box(Vec(static_cast<std::size_t>(d), 0.0), Vec(static_cast<std::size_t>(d), 16.0));
  struct Tally {
    std::size_t triples = 0, sub = 0, sym = 0, uncertified = 0;
    double worst_sym = 0.0;
  };
  auto tallies = parallel_map<Tally>(configs, cfg.threads, [&](std::size_t k) {
    Engine rng(derive_seed(stream, k));
    const SpatialGrid grid(sample_poisson(box, cfg.intensity, rng(), d), 2.0 / std::pow(cfg.intensity, 1.0 / d));
    const std::size_t share = cfg.triples / configs + (k < cfg.triples % configs ? 1 : 0);
    auto point = [&] {
      Vec v(static_cast<std::size_t>(d));
      for (auto& x : v) x = 16.0 * uniform01(rng);
      return v;
    };
    Tally t;
    for (std::size_t i = 0; i < share; ++i) {
      const Vec x = point(), y = point(), z = point();
      const auto fx = passage_times_from(grid, x, std::vector<Vec>{y, z}, alpha);
      const auto fy = passage_times_from(grid, y, std::vector<Vec>{x, z}, alpha);
      ++t.triples;
      t.uncertified += !fx[0].certified + !fx[1].certified + !fy[0].certified + !fy[1].certified;
      if (fx[1].cost > fx[0].cost + fy[1].cost + 1e-9) ++t.sub;
      const double a = fx[0].cost, b = fy[0].cost;
      const double rel = a == b ? 0.0 : std::abs(a - b) / std::max(std::abs(a), std::abs(b));
      t.worst_sym = std::max(t.worst_sym, rel);
      if (rel > 1e-12) ++t.sym;
    }
    return t;
  });
  Tally all;
  for (const auto& t : tallies) {
    all.triples += t.triples;
    all.sub += t.sub;
    all.sym += t.sym;
    all.uncertified += t.uncertified;
    all.worst_sym = std::max(all.worst_sym, t.worst_sym);
  }
  c.passed = all.sub == 0 && all.sym == 0 && all.uncertified == 0;
  c.detail = std::to_string(all.triples) + " triples, subadditivity violations=" + std::to_string(all.sub) +
             ", symmetry violations=" + std::to_string(all.sym) + " (max rel " + g(all.worst_sym) + ")";
  data["subadditivity"] = {{"triples", all.triples},
                           {"subadditivity_violations", all.sub},
                           {"symmetry_violations", all.sym},
                           {"uncertified", all.uncertified},
                           {"max_symmetry_relative_gap", all.worst_sym}};
  return c;
}

CriterionResult poisson_sanity(const ExperimentConfig& cfg, ordered_json& data) {
  CriterionResult c{3, "Poisson sanity", false, "", 0.0, 60.0};
  const int d = cfg.dimension;
  const double lambda = cfg.intensity;
  const std::uint64_t stream = derive_seed(cfg.master_seed, stream_key("acceptance/poisson"));
  const BoxRegion box = BoxRegion::centered_cube(d, 1.0);
  const Vec origin(static_cast<std::size_t>(d), 0.0);
  struct Obs {
    bool void_ball = false;
    double unit_count = 0.0;
  };
  auto obs = parallel_map<Obs>(cfg.poisson_samples, cfg.threads, [&](std::size_t i) {
    const auto s = sample_poisson(box, lambda, derive_seed(stream, i), d);
    Obs o;
    o.void_ball = s.count_in_ball(origin, 1.0) == 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const auto p = s.point(k);
      bool in = true;
      for (double v : p) in = in && v >= 0.0 && v < 1.0;
      o.unit_count += in;
    }
    return o;
  });
  std::size_t voids = 0;
  StreamStats counts("points");
  for (const auto& o : obs) {
    voids += o.void_ball;
    counts.push(o.unit_count);
  }
  const double N = static_cast<double>(cfg.poisson_samples);
  const double p_void = std::exp(-lambda * ball_volume(d, 1.0));
  const double f_void = static_cast<double>(voids) / N;
  const double sd_void = std::sqrt(p_void * (1.0 - p_void) / N);
  const bool void_ok = std::abs(f_void - p_void) <= 3.0 * sd_void;
  const bool mean_ok = std::abs(counts.mean() - lambda) <= 3.0 * std::sqrt(lambda / N);
  const bool var_ok = std::abs(counts.variance() - lambda) <= 3.0 * counts.variance_standard_error();
  c.passed = void_ok && mean_ok && var_ok;
  c.detail = "void freq " + g(f_void) + " vs " + g(p_void) + " (3 sigma " + g(3 * sd_void) + "), unit-box mean " +
             g(counts.mean()) + ", variance " + g(counts.variance());
  data["poisson"] = {{"samples", cfg.poisson_samples}, {"void_frequency", f_void}, {"void_probability", p_void},
                     {"unit_box_mean", counts.mean()},    {"unit_box_variance", counts.variance()},
                     {"void_ok", void_ok},                {"mean_ok", mean_ok},
                     {"variance_ok", var_ok}};
  return c;
}

Pass run_pass(const ExperimentConfig& cfg, const fs::path& dir, std::ostream* log) {
  Pass pass;
  detail::Runner runner(cfg, dir, nullptr);
  auto emit = [&](CriterionResult c, Clock::time_point t0) {
    c.seconds = since(t0);
    if (c.budget_seconds > 0.0 && c.seconds > c.budget_seconds) {
      c.passed = false;
      c.detail += "; over runtime budget";
    }
    if (log) *log << format_criterion(c) << std::endl;
    pass.criteria.push_back(std::move(c));
  };

  auto t0 = Clock::now();
  emit(oracle_fuzz(cfg, pass.data), t0);
  t0 = Clock::now();
  emit(subadditivity(cfg, pass.data), t0);
  t0 = Clock::now();
  emit(poisson_sanity(cfg, pass.data), t0);

  // Estimator campaign: criteria 4-6.
  t0 = Clock::now();
  runner.run("estimate");
  runner.run("fluctuation");
  const double campaign_seconds = since(t0);
  const auto& rep = runner.fluctuation();
  {
    CriterionResult c{4, "time-constant subadditive trend", true, "", 0.0, 300.0};
    std::size_t pairs = 0;
    for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
      const auto& a = rep.rows[i];
      const auto& b = rep.rows[i + 1];
      if (b.n != 2 * a.n) continue;
      ++pairs;
      const double sigma = std::sqrt(b.se_mean * b.se_mean + 4.0 * a.se_mean * a.se_mean);
      if (b.mean_T > 2.0 * a.mean_T + 3.0 * sigma) {
        c.passed = false;
        c.detail += "n=" + std::to_string(a.n) + " fails; ";
      }
    }
    c.detail += std::to_string(pairs) + " doubling pairs checked";
    c.passed = c.passed && pairs > 0;
    CriterionResult timed = c;
    timed.seconds = campaign_seconds;
    if (timed.seconds > timed.budget_seconds) {
      timed.passed = false;
      timed.detail += "; over runtime budget";
    }
    if (log) *log << format_criterion(timed) << std::endl;
    pass.criteria.push_back(timed);
  }
  {
    t0 = Clock::now();
    CriterionResult c{5, "fluctuation nonnegativity", true, "", 0.0, 0.0};
    const int N = rep.rows.back().n;
    std::size_t checked = 0;
    for (const auto& r : rep.rows) {
      if (r.n == N || N % r.n != 0) continue;
      ++checked;
      if (r.fluct_lb < -3.0 * r.fluct_se) {
        c.passed = false;
        c.detail += "n=" + std::to_string(r.n) + " fluct_lb=" + g(r.fluct_lb) + "; ";
      }
    }
    c.detail += std::to_string(checked) + " n values checked against g_hat=" + g(rep.g_hat) +
                ", diagnostic table in fluctuation_diagnostic.csv";
    c.passed = c.passed && checked > 0;
    emit(c, t0);
  }
  {
    t0 = Clock::now();
    CriterionResult c{6, "variance positivity", true, "", 0.0, 0.0};
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& r : rep.rows) {
      worst = std::min(worst, (r.var_T - 3.0 * r.se_var) / std::max(r.se_var, 1e-300));
      if (!(r.var_T - 3.0 * r.se_var > 0.0)) c.passed = false;
    }
    c.detail = "min (psi_hat - 3 sigma)/sigma = " + g(worst) + " over " + std::to_string(rep.rows.size()) + " n";
    emit(c, t0);
  }

  t0 = Clock::now();
  runner.run("bench-resampling");
  {
    const auto& r = *runner.resampling();
    CriterionResult c{7, "resampling claim", r.violations.empty() && r.uncertified == 0, "", 0.0, 60.0};
    c.detail = std::to_string(r.violations.size()) + "/" + std::to_string(r.replicas.size()) +
               " replicas violate T~-T >= 1, min difference " + g(r.min_difference) + ", P(E)=" +
               g(r.event_probability) + "; dump in bench_resampling.csv";
    emit(c, t0);
  }

  t0 = Clock::now();
  runner.run("bench-c-event");
  {
    CriterionResult c{8, "ubiquity event", true, "", 0.0, 0.0};
    for (const auto& row : runner.c_rows()) {
      c.passed = c.passed && row.within_3sigma && row.bound_ok;
      c.detail += row.label + " k=" + std::to_string(row.k_count) + " p=" + g(row.estimate.p_hat) + " vs " +
                  g(*row.estimate.analytic) + (row.within_3sigma ? "" : " OUTSIDE 3 sigma") +
                  (row.bound_ok ? "" : " BELOW bound") + "; ";
    }
    c.detail += "theta within gate";
    emit(c, t0);
  }

  t0 = Clock::now();
  runner.run("bench-audit");
  {
    CriterionResult c{9, "geodesic audits", true, "", 0.0, 0.0};
    std::uint64_t local = 0, jumps = 0, checked = 0, geodesics = 0, uncertified = 0;
    for (const auto& e : runner.estimates()) {
      local += e.audit_violations;
      geodesics += e.replicas.size();
    }
    for (const auto& [n, s] : runner.audits()) {
      local += s.local_violations;
      jumps += s.jump_violations;
      checked += s.jump_checked;
      geodesics += s.geodesics;
      uncertified += s.uncertified;
    }
    c.passed = local == 0 && jumps == 0 && uncertified == 0;
    c.detail = std::to_string(geodesics) + " geodesics, local violations=" + std::to_string(local) +
               ", jump violations=" + std::to_string(jumps) + " (" + std::to_string(checked) +
               " gated crossings checked)";
    emit(c, t0);
  }

  t0 = Clock::now();
  runner.run("bench-rotation");
  {
    const auto& r = *runner.rotation();
    CriterionResult c{10, "rotation invariance", r.passed, "", 0.0, 0.0};
    c.detail = std::to_string(r.not_rejected) + "/" + std::to_string(r.repetitions.size()) +
               " repetitions not rejected; unpadded control p=" + g(r.control.p_value);
    emit(c, t0);
  }

  ordered_json j;
  j["config"] = ordered_json::parse(serialize_config(cfg));
  j["config"].erase("output_dir");  // location must not change the bytes
  auto& arr = j["criteria"] = ordered_json::array();
  for (const auto& c : pass.criteria) {
    arr.push_back({{"id", c.id}, {"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  j["data"] = pass.data;
  write_text_file(dir / "acceptance.json", j.dump(2) + "\n");
  return pass;
}

std::vector<std::string> compare_trees(const fs::path& a, const fs::path& b, std::size_t& compared) {
  std::vector<std::string> diffs;
  std::vector<std::string> fa, fb;
  for (const auto& [root, list] : {std::pair{&a, &fa}, std::pair{&b, &fb}}) {
    if (!fs::exists(*root)) continue;
    for (const auto& e : fs::recursive_directory_iterator(*root)) {
      if (e.is_regular_file()) list->push_back(fs::relative(e.path(), *root).generic_string());
    }
    std::sort(list->begin(), list->end());
  }
  if (fa != fb) diffs.push_back("file sets differ");
  for (const auto& f : fa) {
    if (!fs::exists(b / f)) continue;
    ++compared;
    if (read_text_file(a / f) != read_text_file(b / f)) diffs.push_back(f);
  }
  return diffs;
}

}  // namespace

AcceptanceReport run_acceptance(const ExperimentConfig& config, const fs::path& dir, std::ostream* log,
                                bool check_reproducibility) {
  config.validate();
  const auto start = Clock::now();
  fs::remove_all(dir / "run1");
  fs::remove_all(dir / "run2");
  AcceptanceReport report;
  const auto first = run_pass(config, dir / "run1", log);
  report.criteria = first.criteria;

  if (check_reproducibility) {
    if (log) *log << "repeating criteria 1-10 for the reproducibility check" << std::endl;
    // Criteria 4-6 share one estimator campaign, so the repeat is silent.
    run_pass(config, dir / "run2", nullptr);
    std::size_t compared = 0;
    const auto diffs = compare_trees(dir / "run1", dir / "run2", compared);
    CriterionResult c{11, "reproducibility", diffs.empty() && compared > 0, "", since(start), 900.0};
    c.detail = std::to_string(compared) + " output files compared, " + std::to_string(diffs.size()) + " differ";
    for (const auto& d : diffs) c.detail += "; " + d;
    if (c.seconds > c.budget_seconds) {
      c.passed = false;
      c.detail += "; total suite over runtime budget";
    }
    if (log) *log << format_criterion(c) << std::endl;
    report.criteria.push_back(c);
  }

  ordered_json j = ordered_json::array();
  for (const auto& c : report.criteria) {
    j.push_back({{"id", c.id},
                 {"name", c.name},
                 {"passed", c.passed},
                 {"detail", c.detail},
                 {"seconds", c.seconds},
                 {"budget_seconds", c.budget_seconds}});
  }
  write_text_file(dir / "acceptance_results.json", j.dump(2) + "\n");
  if (log) {
    *log << (report.all_passed() ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED") << " ("
         << std::count_if(report.criteria.begin(), report.criteria.end(),
                          [](const CriterionResult& c) { return c.passed; })
         << "/" << report.criteria.size() << " criteria)" << std::endl;
  }
  return report;
}

}  // namespace fpp
