#include "runner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fpp/errors.hpp"
#include "fpp/io.hpp"
#include "fpp/seeding.hpp"

namespace fpp::detail {

using nlohmann::ordered_json;

ordered_json num(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

ordered_json event_json(const EventEstimate& e) {
  ordered_json j{{"name", e.name},     {"hits", e.hits}, {"trials", e.trials},
                 {"p_hat", e.p_hat}, {"ci95", e.ci95}};
  j["analytic"] = e.analytic ? num(*e.analytic) : ordered_json(nullptr);
  j["analytic_bound"] = e.analytic_bound ? num(*e.analytic_bound) : ordered_json(nullptr);
  return j;
}

namespace {

Vec unit_axis(int d, int axis) {
  Vec v(static_cast<std::size_t>(d), 0.0);
  v[static_cast<std::size_t>(axis)] = 1.0;
  return v;
}

Vec diagonal(int d) {
  Vec v(static_cast<std::size_t>(d), 0.0);
  v[0] = v[1] = std::numbers::sqrt2 / 2.0;
  return v;
}

}  // namespace

Runner::Runner(ExperimentConfig config, std::filesystem::path dir, std::ostream* log)
    : cfg_(std::move(config)), dir_(std::move(dir)), log_(log) {
  cfg_.validate();
}

void Runner::note(const std::string& line) {
  if (log_) *log_ << line << std::endl;
}

void Runner::write_text(const std::string& file, const std::string& text, Outcome& out) {
  write_text_file(dir_ / file, text);
  out.files.push_back(file);
}

void Runner::write_json(const std::string& file, const ordered_json& j, Outcome& out) {
  write_text(file, j.dump(2) + "\n", out);
}

ordered_json Runner::header(const std::string& name, const std::string& stream) const {
  ordered_json j;
  j["name"] = name;
  j["params"] = {{"dimension", cfg_.dimension}, {"alpha", cfg_.alpha}, {"intensity", cfg_.intensity},
                 {"theta", cfg_.theta},         {"delta", cfg_.delta}, {"c_ubiq", cfg_.c_ubiq}};
  j["seeds"] = {{"master_seed", cfg_.master_seed},
                {"stream", stream},
                {"stream_seed", derive_seed(cfg_.master_seed, stream_key(stream))}};
  return j;
}

Outcome Runner::run(const std::string& e) {
  if (e == "estimate") return estimate();
  if (e == "fluctuation") return fluctuation_outputs();
  if (e == "bench-midpoint") return bench_midpoint();
  if (e == "bench-argmin") return bench_argmin();
  if (e == "bench-a24a25") return bench_a24a25();
  if (e == "bench-audit") return bench_audit();
  if (e == "bench-c-event") return bench_c_event();
  if (e == "bench-resampling") return bench_resampling();
  if (e == "bench-rotation") return bench_rotation();
  throw InvalidInput("Runner: no such experiment: " + e);
}

// ---------------------------------------------------------------------------

const std::vector<EstimateResult>& Runner::estimates() {
  if (!estimates_) {
    std::vector<EstimateResult> out;
    const auto settings = cfg_.campaign();
    for (int n : cfg_.n_values) {
      note("  estimate n=" + std::to_string(n));
      out.push_back(estimate_T(n, settings));
    }
    estimates_ = std::move(out);
  }
  return *estimates_;
}

const FluctuationReport& Runner::fluctuation() {
  if (!fluctuation_) fluctuation_ = build_fluctuation_report(cfg_.campaign(), cfg_.n_values, estimates());
  return *fluctuation_;
}

double Runner::phi_for(int n) {
  if (cfg_.phi_override) return *cfg_.phi_override;
  if (std::find(cfg_.n_values.begin(), cfg_.n_values.end(), n) == cfg_.n_values.end()) {
    throw ConfigError("bench n=" + std::to_string(n) + " needs phi_hat: add it to n_values or set phi_override");
  }
  // A sample variance above n would give phi < 1; the family needs phi >= 1.
  return std::max(1.0, fluctuation().phi_hat(n));
}

Outcome Runner::estimate() {
  Outcome out;
  const auto& est = estimates();
  auto j = header("estimate", "estimate");
  j["replicas"] = cfg_.replicas;
  auto& rows = j["rows"] = ordered_json::array();
  for (const auto& e : est) {
    rows.push_back({{"n", e.n},
                    {"count", e.stats.count()},
                    {"excluded", e.excluded},
                    {"boundary_unclear", e.boundary_unclear},
                    {"audit_violations", e.audit_violations},
                    {"max_jump", e.max_jump},
                    {"mean_T", e.stats.mean()},
                    {"var_T", e.stats.variance()},
                    {"se_mean", e.stats.standard_error()},
                    {"ci95_mean", e.stats.ci95_mean()},
                    {"ci95_var", e.stats.ci95_variance()}});
    out.passed = out.passed && e.audit_violations == 0;
  }
  write_json("estimate.json", j, out);
  std::ostringstream csv;
  write_replicas_csv(csv, est);
  write_text("estimate_replicas.csv", csv.str(), out);
  return out;
}

Outcome Runner::fluctuation_outputs() {
  Outcome out;
  const auto& rep = fluctuation();
  std::ostringstream csv, json, diag;
  write_fluctuation_csv(csv, rep);
  write_fluctuation_json(json, rep);
  write_fluctuation_diagnostic_csv(diag, rep);
  write_text("fluctuation.csv", csv.str(), out);
  write_text("fluctuation.json", json.str(), out);
  write_text("fluctuation_diagnostic.csv", diag.str(), out);
  for (const auto& r : rep.rows) {
    if (r.var_T - 3.0 * r.se_var <= 0.0) out.passed = false;
    if (r.n != rep.rows.back().n && r.fluct_lb < -3.0 * r.fluct_se) out.passed = false;
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome Runner::bench_midpoint() {
  Outcome out;
  auto j = header("bench-midpoint", "midpoint-gain");
  auto& rows = j["results"] = ordered_json::array();
  std::ostringstream csv;
  csv << "n,replica,difference\n";
  const auto settings = cfg_.campaign(cfg_.bench_replicas);
  for (int n : cfg_.bench_n_values) {
    note("  midpoint n=" + std::to_string(n));
    const auto r = midpoint_gain(n, settings);
    const bool ok = r.min_difference >= -1e-9;
    out.passed = out.passed && ok;
    rows.push_back({{"n", n},
                    {"replicas", settings.replicas},
                    {"excluded", r.excluded},
                    {"mean", r.stats.mean()},
                    {"variance", r.stats.variance()},
                    {"ci95_mean", r.stats.ci95_mean()},
                    {"min_difference", num(r.min_difference)},
                    {"nonnegative", ok}});
    for (std::size_t i = 0; i < r.differences.size(); ++i) {
      csv << n << ',' << i << ',' << fmt_double(r.differences[i]) << '\n';
    }
  }
  j["passed"] = out.passed;
  write_json("bench_midpoint.json", j, out);
  write_text("bench_midpoint.csv", csv.str(), out);
  return out;
}

Outcome Runner::bench_argmin() {
  Outcome out;
  auto j = header("bench-argmin", "argmin");
  auto& rows = j["results"] = ordered_json::array();
  const auto settings = cfg_.campaign(cfg_.bench_replicas);
  for (int n : cfg_.bench_n_values) {
    note("  argmin n=" + std::to_string(n));
    const double phi = phi_for(n);
    const auto family = build_lambda(n, phi, cfg_.dimension);
    const auto r = argmin_lambda(n, family, settings);
    // Mirror pair +-s e2: equal probabilities by reflection. The two
    // estimates share replicas, so the difference uses the multinomial variance.
    const auto sym = argmin_lambda(n, symmetric_pair(n, phi, cfg_.dimension, 1), settings);
    const double p1 = sym.per_y[0].p_hat, p2 = sym.per_y[1].p_hat;
    const double se_diff = std::sqrt(std::max(0.0, p1 + p2 - (p1 - p2) * (p1 - p2)) / sym.trials);
    const bool symmetric_ok = std::abs(p1 - p2) <= 3.0 * se_diff;
    const bool ok = r.max_fired <= 1 && sym.max_fired <= 1 && symmetric_ok;
    out.passed = out.passed && ok;
    ordered_json per_y = ordered_json::array();
    for (std::size_t i = 0; i < r.per_y.size(); ++i) {
      auto e = event_json(r.per_y[i]);
      e["y"] = family.points[i];
      per_y.push_back(e);
    }
    rows.push_back({{"n", n},
                    {"phi_n", phi},
                    {"family_size", family.points.size()},
                    {"trials", r.trials},
                    {"ties", r.ties},
                    {"max_fired", r.max_fired},
                    {"sum_p", r.sum_p},
                    {"per_y", per_y},
                    {"mirror_p", {p1, p2}},
                    {"mirror_se_diff", se_diff},
                    {"mirror_within_3sigma", symmetric_ok},
                    {"passed", ok}});
  }
  j["passed"] = out.passed;
  write_json("bench_argmin.json", j, out);
  return out;
}

Outcome Runner::bench_a24a25() {
  Outcome out;
  auto j = header("bench-a24a25", "a24-a25");
  auto& rows = j["results"] = ordered_json::array();
  const auto settings = cfg_.campaign(cfg_.bench_replicas);
  std::vector<EventEstimate> s24, s25;
  for (int n : cfg_.bench_n_values) {
    note("  a24/a25 n=" + std::to_string(n));
    const double phi = phi_for(n);
    const auto r = event_A24_A25(n, build_lambda(n, phi, cfg_.dimension), phi, settings);
    s24.push_back(r.a24);
    s25.push_back(r.a25);
    rows.push_back({{"n", n},
                    {"phi_n", phi},
                    {"threshold24", r.threshold24},
                    {"threshold25", r.threshold25},
                    {"a24", event_json(r.a24)},
                    {"a25", event_json(r.a25)}});
  }
  j["a24_nondecreasing"] = nondecreasing_within(s24);
  j["a25_nondecreasing"] = nondecreasing_within(s25);
  out.passed = nondecreasing_within(s24) && nondecreasing_within(s25);
  j["passed"] = out.passed;
  write_json("bench_a24a25.json", j, out);
  return out;
}

Outcome Runner::bench_audit() {
  Outcome out;
  auto j = header("bench-audit", "geodesic-audit");
  auto& rows = j["results"] = ordered_json::array();
  const auto settings = cfg_.campaign(cfg_.bench_replicas);
  const auto params = cfg_.bench_params();
  std::ostringstream csv;
  csv << "n,phi_n,K,geodesics,uncertified,local_violations,in_v,in_w,in_vw,in_x,crossings,jump_checked,"
         "jump_violations,witness_checked,witness_outside,b_event_failures,max_entry_jump\n";
  std::vector<EventEstimate> vw;
  audits_.clear();
  for (int n : cfg_.bench_n_values) {
    note("  audit n=" + std::to_string(n));
    const double phi = phi_for(n);
    const double K = params.K(phi);
    const auto s = geodesic_audit_campaign(n, build_lambda(n, phi, cfg_.dimension), params, K, settings);
    audits_[n] = s;
    const bool ok = s.uncertified == 0 && s.local_violations == 0 && s.jump_violations == 0 && s.b_event_failures == 0;
    out.passed = out.passed && ok;
    const auto certified = s.geodesics - s.uncertified;
    if (certified > 0) vw.push_back(EventEstimate::from_counts("V&W", s.in_vw, certified));
    rows.push_back({{"n", n},
                    {"phi_n", phi},
                    {"K", K},
                    {"geodesics", s.geodesics},
                    {"uncertified", s.uncertified},
                    {"local_violations", s.local_violations},
                    {"in_v", s.in_v},
                    {"in_w", s.in_w},
                    {"in_vw", s.in_vw},
                    {"in_x", s.in_x},
                    {"crossings", s.crossings},
                    {"jump_checked", s.jump_checked},
                    {"jump_violations", s.jump_violations},
                    {"witness_checked", s.witness_checked},
                    {"witness_outside", s.witness_outside},
                    {"b_event_failures", s.b_event_failures},
                    {"max_entry_jump", s.max_entry_jump},
                    {"passed", ok}});
    csv << n << ',' << fmt_double(phi) << ',' << fmt_double(K) << ',' << s.geodesics << ',' << s.uncertified << ','
        << s.local_violations << ',' << s.in_v << ',' << s.in_w << ',' << s.in_vw << ',' << s.in_x << ','
        << s.crossings << ',' << s.jump_checked << ',' << s.jump_violations << ',' << s.witness_checked << ','
        << s.witness_outside << ',' << s.b_event_failures << ',' << fmt_double(s.max_entry_jump) << '\n';
  }
  j["vw_nondecreasing"] = nondecreasing_within(vw);
  j["passed"] = out.passed;
  write_json("bench_audit.json", j, out);
  write_text("bench_audit.csv", csv.str(), out);
  return out;
}

Outcome Runner::bench_c_event() {
  Outcome out;
  auto j = header("bench-c-event", "c-event");
  const auto params = cfg_.bench_params();
  const int d = cfg_.dimension;
  const double phi = phi_for(cfg_.n_values.back());
  const std::uint64_t stream = derive_seed(cfg_.master_seed, stream_key("c-event"));
  Vec y(static_cast<std::size_t>(d), 0.0);
  Vec z(static_cast<std::size_t>(d), 1.0);

  auto judge = [&](CEventRow row) {
    const double a = *row.estimate.analytic;
    const double sigma = std::sqrt(a * (1.0 - a) / static_cast<double>(row.estimate.trials));
    row.within_3sigma = std::abs(row.estimate.p_hat - a) <= 3.0 * sigma;
    if (row.estimate.analytic_bound) row.bound_ok = a >= *row.estimate.analytic_bound;
    return row;
  };

  c_rows_.clear();
  {
    CEventRow row;
    row.label = "configured";
    row.c = params.c_ubiq;
    row.K = params.C_delta() * params.K(phi);
    row.k_count = ubiquity_count(row.K, row.c);
    row.gate = params.within_gate(d);
    row.estimate = c_event(y, z, params, phi, cfg_.intensity, cfg_.ubiquity_replicas, derive_seed(stream, 0), true,
                           cfg_.threads);
    c_rows_.push_back(judge(row));
  }
  // Fixed (c, K) pairs with nonempty index sets, so the closed form is exercised.
  const std::vector<std::pair<double, double>> extra{{0.2, 1.0}, {0.24, 1.6}, {0.249, 2.0}};
  for (std::size_t i = 0; i < extra.size(); ++i) {
    CEventRow row;
    row.label = "fixed-" + std::to_string(i + 1);
    row.c = extra[i].first;
    row.K = extra[i].second;
    row.k_count = ubiquity_count(row.K, row.c);
    row.estimate = ubiquity_event(y, z, row.c, row.K, cfg_.intensity, cfg_.ubiquity_replicas,
                                  derive_seed(stream, i + 1), cfg_.threads);
    c_rows_.push_back(judge(row));
  }

  auto& rows = j["results"] = ordered_json::array();
  std::ostringstream csv;
  csv << "label,c,K,k_count,hits,trials,p_hat,analytic,analytic_bound,within_3sigma,bound_ok\n";
  for (const auto& r : c_rows_) {
    out.passed = out.passed && r.within_3sigma && r.bound_ok;
    auto e = event_json(r.estimate);
    e["label"] = r.label;
    e["c"] = r.c;
    e["K"] = r.K;
    e["k_count"] = r.k_count;
    e["within_3sigma"] = r.within_3sigma;
    e["bound_ok"] = r.bound_ok;
    rows.push_back(e);
    csv << r.label << ',' << fmt_double(r.c) << ',' << fmt_double(r.K) << ',' << r.k_count << ','
        << r.estimate.hits << ',' << r.estimate.trials << ',' << fmt_double(r.estimate.p_hat) << ','
        << fmt_double(*r.estimate.analytic) << ','
        << (r.estimate.analytic_bound ? fmt_double(*r.estimate.analytic_bound) : std::string()) << ','
        << r.within_3sigma << ',' << r.bound_ok << '\n';
  }
  j["phi_n"] = phi;
  j["gate"] = BenchParams::theta_gate(d, params.c_ubiq, params.delta);
  j["passed"] = out.passed;
  write_json("bench_c_event.json", j, out);
  write_text("bench_c_event.csv", csv.str(), out);
  return out;
}

Outcome Runner::bench_resampling() {
  Outcome out;
  auto j = header("bench-resampling", "resampling");
  const auto r = resampling_variance_experiment(cfg_.resampling_n, cfg_.campaign(cfg_.resampling_replicas));
  std::size_t abs_ge_one = 0, nonnegative = 0;
  std::ostringstream csv;
  csv << "replica,seed,seed2,T,T_resampled,difference,certified";
  for (int a = 0; a < cfg_.dimension; ++a) csv << ",start_" << a;
  for (int a = 0; a < cfg_.dimension; ++a) csv << ",start_resampled_" << a;
  csv << '\n';
  for (const auto& rep : r.replicas) {
    abs_ge_one += std::abs(rep.difference) >= 1.0 - 1e-9;
    nonnegative += rep.difference >= 0.0;
    csv << rep.replica << ',' << rep.seed << ',' << rep.seed2 << ',' << fmt_double(rep.T) << ','
        << fmt_double(rep.T_resampled) << ',' << fmt_double(rep.difference) << ',' << rep.certified;
    for (double v : rep.start) csv << ',' << fmt_double(v);
    for (double v : rep.start_resampled) csv << ',' << fmt_double(v);
    csv << '\n';
  }
  out.passed = r.violations.empty() && r.uncertified == 0;
  j["n"] = r.n;
  j["replicas"] = r.replicas.size();
  j["uncertified"] = r.uncertified;
  j["event_probability"] = r.event_probability;
  j["implied_variance_bound"] = r.implied_variance_bound;
  j["violations"] = r.violations.size();
  j["violating_replicas"] = r.violations;
  j["min_difference"] = num(r.min_difference);
  j["mean_difference"] = r.differences.mean();
  j["abs_difference_at_least_one"] = abs_ge_one;
  j["nonnegative_difference"] = nonnegative;
  j["passed"] = out.passed;
  write_json("bench_resampling.json", j, out);
  write_text("bench_resampling.csv", csv.str(), out);
  resampling_ = r;
  return out;
}

Outcome Runner::bench_rotation() {
  Outcome out;
  auto j = header("bench-rotation", "rotation");
  const auto settings = cfg_.campaign(cfg_.rotation_replicas);
  const std::vector<Vec> dirs{unit_axis(cfg_.dimension, 0), diagonal(cfg_.dimension)};
  RotationRun run;
  std::ostringstream csv;
  csv << "repetition,statistic,p_value\n";
  for (std::size_t k = 0; k < cfg_.rotation_repetitions; ++k) {
    note("  rotation repetition " + std::to_string(k));
    const auto r = rotation_invariance_test(cfg_.rotation_n, dirs, settings, "rotation/rep" + std::to_string(k));
    run.repetitions.push_back(r.pairs.front().ks);
    run.not_rejected += r.passed;
    csv << k << ',' << fmt_double(r.pairs.front().ks.statistic) << ',' << fmt_double(r.pairs.front().ks.p_value)
        << '\n';
  }
  run.control =
      rotation_invariance_test(cfg_.rotation_n, dirs, settings, "rotation/control", false).pairs.front().ks;
  const auto need = static_cast<std::size_t>(std::ceil(0.8 * static_cast<double>(cfg_.rotation_repetitions)));
  run.passed = run.not_rejected >= need && run.control.p_value <= 0.01;
  out.passed = run.passed;
  j["n"] = cfg_.rotation_n;
  j["replicas_per_direction"] = cfg_.rotation_replicas;
  j["repetitions"] = cfg_.rotation_repetitions;
  j["not_rejected"] = run.not_rejected;
  j["required"] = need;
  auto& reps = j["results"] = ordered_json::array();
  for (const auto& ks : run.repetitions) reps.push_back({{"statistic", ks.statistic}, {"p_value", ks.p_value}});
  j["control"] = {{"statistic", run.control.statistic}, {"p_value", run.control.p_value}};
  j["passed"] = out.passed;
  write_json("bench_rotation.json", j, out);
  write_text("bench_rotation.csv", csv.str(), out);
  rotation_ = run;
  return out;
}

}  // namespace fpp::detail
