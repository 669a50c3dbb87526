#include "fpp/estimator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "json.hpp"

#include "fpp/errors.hpp"
#include "fpp/io.hpp"
#include "fpp/parallel.hpp"
#include "fpp/seeding.hpp"

namespace fpp {

double CampaignSettings::cell_size() const {
  return cell_scale * std::pow(intensity, -1.0 / dimension);
}

BoxRegion segment_box(const Vec& a, const Vec& b, double pad) {
  if (a.size() != b.size()) throw InvalidInput("segment_box: dimension mismatch");
  Vec lo(a.size()), hi(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    lo[i] = std::min(a[i], b[i]) - pad;
    hi[i] = std::max(a[i], b[i]) + pad;
  }
  return {std::move(lo), std::move(hi)};
}

std::uint64_t replica_seed(std::uint64_t master, const std::string& tag, double n, std::size_t r) {
  const auto stream = derive_seed(derive_seed(master, stream_key(tag)), std::bit_cast<std::uint64_t>(n));
  return derive_seed(stream, r);
}

PaddedGeodesic padded_passage_time(const Vec& from, const Vec& to, double pad, std::uint64_t seed,
                                   const CampaignSettings& settings) {
  if (!(pad > 0.0)) throw InvalidInput("padded_passage_time: padding must be positive");
  const AlphaParam alpha = settings.alpha_param();
  for (int attempt = 0;; ++attempt) {
    const auto box = segment_box(from, to, pad * std::ldexp(1.0, attempt));
    SpatialGrid grid(sample_poisson(box, settings.intensity, derive_seed(seed, attempt),
                                    settings.dimension),
                     settings.cell_size());
    auto g = passage_time(grid, from, to, alpha, settings.geodesic);
    if (g.boundary_clear || attempt >= settings.max_box_doublings) {
      return {std::move(g), attempt + 1, std::move(grid)};
    }
  }
}

EstimateResult estimate_T(double n, const CampaignSettings& settings) {
  if (!(n > 0.0)) throw InvalidInput("estimate_T: n must be positive");
  if (settings.replicas < 2) throw InvalidInput("estimate_T: need at least two replicas");
  const AlphaParam alpha = settings.alpha_param();
  const auto d = static_cast<std::size_t>(settings.dimension);
  const Vec origin(d, 0.0);
  Vec end(d, 0.0);
  end[0] = n;
  const double pad = settings.padding.value_or(n / 2.0);

  auto records = parallel_map<ReplicaRecord>(settings.replicas, settings.threads, [&](std::size_t r) {
    ReplicaRecord rec;
    rec.replica = r;
    rec.seed = replica_seed(settings.master_seed, "estimate", n, r);
    auto run = padded_passage_time(origin, end, pad, rec.seed, settings);
    // Re-audited independently of how certification was reached.
    rec.audit_violations = audit_local_optimality(run.geodesic, run.grid, alpha).size();
    rec.value = run.geodesic.cost;
    rec.certified = run.geodesic.certified;
    rec.boundary_clear = run.geodesic.boundary_clear;
    rec.box_attempts = run.box_attempts;
    rec.max_jump = max_jump(run.geodesic);
    rec.path_vertices = run.geodesic.path.size();
    return rec;
  });

  EstimateResult out;
  out.n = n;
  for (const auto& rec : records) {
    if (!rec.certified) {
      ++out.excluded;
      continue;
    }
    out.stats.push(rec.value);
    out.boundary_unclear += !rec.boundary_clear;
    out.audit_violations += rec.audit_violations;
    out.max_jump = std::max(out.max_jump, rec.max_jump);
  }
  out.replicas = std::move(records);
  const double rate = static_cast<double>(out.excluded) / static_cast<double>(settings.replicas);
  if (rate > settings.max_exclusion_rate) {
    throw CampaignFailure("estimate_T(n=" + fmt_double(n) + "): " + std::to_string(out.excluded) +
                          " uncertified replicas exceed the exclusion budget");
  }
  return out;
}

// ---------------------------------------------------------------------------

double g_hat(const std::vector<int>& n_values, const std::vector<double>& means) {
  if (n_values.empty() || n_values.size() != means.size()) {
    throw InvalidInput("g_hat: need matching, nonempty n and mean lists");
  }
  const auto top = std::max_element(n_values.begin(), n_values.end()) - n_values.begin();
  return means[static_cast<std::size_t>(top)] / n_values[static_cast<std::size_t>(top)];
}

std::vector<double> fluctuation_lower_bound(const std::vector<int>& n_values,
                                            const std::vector<double>& means, double g) {
  if (n_values.size() != means.size()) throw InvalidInput("fluctuation_lower_bound: size mismatch");
  std::vector<double> out(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) out[i] = means[i] - n_values[i] * g;
  return out;
}

double affine_slope_upper_half(const std::vector<int>& n_values, const std::vector<double>& means) {
  const std::size_t k = n_values.size();
  const std::size_t start = k / 2;
  if (k - start < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(k - start);
  for (std::size_t i = start; i < k; ++i) {
    sx += n_values[i];
    sy += means[i];
    sxx += static_cast<double>(n_values[i]) * n_values[i];
    sxy += n_values[i] * means[i];
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

double phi_from_variance(double n, double psi) {
  if (!(psi > 0.0)) return std::numeric_limits<double>::infinity();
  return std::sqrt(n / psi);
}

const FluctuationRow& FluctuationReport::row(int n) const {
  for (const auto& r : rows) {
    if (r.n == n) return r;
  }
  throw InvalidInput("FluctuationReport: no row for n=" + std::to_string(n));
}

FluctuationReport build_fluctuation_report(const CampaignSettings& settings,
                                           const std::vector<int>& n_values,
                                           const std::vector<EstimateResult>& estimates) {
  if (n_values.empty() || n_values.size() != estimates.size()) {
    throw InvalidInput("build_fluctuation_report: n values and estimates must match");
  }
  for (std::size_t i = 1; i < n_values.size(); ++i) {
    if (n_values[i] <= n_values[i - 1]) throw InvalidInput("n values must be strictly increasing");
  }
  FluctuationReport rep;
  rep.alpha = settings.alpha;
  rep.dimension = settings.dimension;
  rep.replicas = settings.replicas;
  rep.master_seed = settings.master_seed;

  std::vector<double> means;
  for (const auto& e : estimates) means.push_back(e.stats.mean());
  rep.g_hat = g_hat(n_values, means);
  rep.g_affine = affine_slope_upper_half(n_values, means);
  const auto fl = fluctuation_lower_bound(n_values, means, rep.g_hat);

  const int top = n_values.back();
  const double se_top = estimates.back().stats.standard_error();
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    const auto& s = estimates[i].stats;
    FluctuationRow row;
    row.n = n_values[i];
    row.replicas = s.count();
    row.mean_T = s.mean();
    row.var_T = s.variance();
    row.phi_hat = phi_from_variance(row.n, row.var_T);
    row.fluct_lb = row.n == top ? 0.0 : fl[i];
    row.ci95_mean = s.ci95_mean();
    row.ci95_var = s.ci95_variance();
    row.se_mean = s.standard_error();
    row.se_var = s.variance_standard_error();
    if (row.n != top) {
      const double ratio = static_cast<double>(row.n) / top;
      row.fluct_se = std::sqrt(row.se_mean * row.se_mean + ratio * ratio * se_top * se_top);
    }
    row.excluded = estimates[i].excluded;
    rep.rows.push_back(row);
  }
  return rep;
}

void write_fluctuation_csv(std::ostream& out, const FluctuationReport& rep) {
  out << kFluctuationCsvHeader << '\n';
  for (const auto& r : rep.rows) {
    out << fmt_double(rep.alpha) << ',' << rep.dimension << ',' << r.n << ',' << r.replicas << ','
        << fmt_double(r.mean_T) << ',' << fmt_double(r.var_T) << ',' << fmt_double(r.phi_hat) << ','
        << fmt_double(rep.g_hat) << ',' << fmt_double(r.fluct_lb) << ',' << fmt_double(r.ci95_mean)
        << ',' << fmt_double(r.ci95_var) << ',' << r.excluded << '\n';
  }
}

void write_fluctuation_diagnostic_csv(std::ostream& out, const FluctuationReport& rep) {
  out << "n,log_phi_hat,fluct_lb,fluct_se\n";
  for (const auto& r : rep.rows) {
    out << r.n << ',' << fmt_double(std::log(r.phi_hat)) << ',' << fmt_double(r.fluct_lb) << ','
        << fmt_double(r.fluct_se) << '\n';
  }
}

void write_replicas_csv(std::ostream& out, const std::vector<EstimateResult>& estimates) {
  out << "n,replica,seed,T,certified,boundary_clear,box_attempts,max_jump,path_vertices,"
         "audit_violations\n";
  for (const auto& e : estimates) {
    for (const auto& r : e.replicas) {
      out << fmt_double(e.n) << ',' << r.replica << ',' << r.seed << ',' << fmt_double(r.value) << ','
          << r.certified << ',' << r.boundary_clear << ',' << r.box_attempts << ','
          << fmt_double(r.max_jump) << ',' << r.path_vertices << ',' << r.audit_violations << '\n';
    }
  }
}

void write_fluctuation_json(std::ostream& out, const FluctuationReport& rep) {
  nlohmann::ordered_json j;
  j["alpha"] = rep.alpha;
  j["d"] = rep.dimension;
  j["replicas"] = rep.replicas;
  j["master_seed"] = rep.master_seed;
  j["g_hat"] = rep.g_hat;
  j["g_affine"] = rep.g_affine;
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"n", r.n},
                    {"replicas", r.replicas},
                    {"mean_T", r.mean_T},
                    {"var_T", r.var_T},
                    {"phi_hat", r.phi_hat},
                    {"fluct_lb", r.fluct_lb},
                    {"ci95_mean", r.ci95_mean},
                    {"ci95_var", r.ci95_var},
                    {"se_mean", r.se_mean},
                    {"se_var", r.se_var},
                    {"fluct_se", r.fluct_se},
                    {"excluded", r.excluded}});
  }
  out << j.dump(2) << '\n';
}

FluctuationReport read_fluctuation_json(std::istream& in) {
  const auto j = nlohmann::json::parse(in);
  auto num = [](const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
  };
  FluctuationReport rep;
  rep.alpha = j.at("alpha").get<double>();
  rep.dimension = j.at("d").get<int>();
  rep.replicas = j.at("replicas").get<std::size_t>();
  rep.master_seed = j.at("master_seed").get<std::uint64_t>();
  rep.g_hat = j.at("g_hat").get<double>();
  rep.g_affine = j.at("g_affine").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                            : j.at("g_affine").get<double>();
  for (const auto& r : j.at("rows")) {
    FluctuationRow row;
    row.n = r.at("n").get<int>();
    row.replicas = r.at("replicas").get<std::size_t>();
    row.mean_T = r.at("mean_T").get<double>();
    row.var_T = r.at("var_T").get<double>();
    row.phi_hat = num(r.at("phi_hat"));
    row.fluct_lb = r.at("fluct_lb").get<double>();
    row.ci95_mean = r.at("ci95_mean").get<double>();
    row.ci95_var = r.at("ci95_var").get<double>();
    row.se_mean = r.at("se_mean").get<double>();
    row.se_var = r.at("se_var").get<double>();
    row.fluct_se = r.at("fluct_se").get<double>();
    row.excluded = r.at("excluded").get<std::size_t>();
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace fpp
