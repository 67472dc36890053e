#include "cml/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "cml/error.hpp"
#include "cml/evt.hpp"
#include "cml/io.hpp"
#include "cml/kernels.hpp"
#include "cml/parallel.hpp"
#include "cml/theory.hpp"

namespace cml {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void add_note(SweepRow& row, const std::string& what, const std::exception& e) {
  row.flagged = true;
  if (!row.note.empty()) row.note += "; ";
  row.note += what + ": " + e.what();
}

// CSV cells must not contain the separator.
std::string csv_text(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::vector<std::uint8_t> in_strip(Simulator& sim, std::size_t steps, double accuracy) {
  const auto& k = kernels::active();
  std::vector<std::uint8_t> out(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    if (i > 0) sim.advance();
    out[i] = k.range(sim.current()) <= accuracy ? 1 : 0;
  }
  return out;
}

}  // namespace

std::string point_tag(std::size_t n, double gamma, double epsilon) {
  return "n" + std::to_string(n) + "_g" + format_double(gamma) + "_e" + format_double(epsilon);
}

std::uint64_t point_seed(std::uint64_t master, std::size_t n, std::size_t gamma_index, std::size_t noise_index) {
  return derive_seed({master, n, gamma_index, noise_index});
}

double theory_value(const ExperimentConfig& c, std::size_t n, double gamma) {
  try {
    const LocalMap map = c.local_map();
    const double lambda = map.expansion_bound();
    if (c.observable == "global") {
      const MapSpec spec(map, n, gamma);
      return ei_sync_formula(spec, [](double) { return 1.0; });
    }
    if (c.observable == "local" || c.observable == "local_ring") return ei_sync_flat_asymptotic(2, gamma, lambda);
    if (c.observable == "localization") {
      const MapSpec spec(map, n, gamma);
      const auto z = LatticeState::diagonal(n, c.target);
      return ei_periodic_point(std::span<const LatticeState>(&z, 1), spec);
    }
  } catch (const std::exception&) {
  }
  return kNaN;
}

double asymptotic_value(const ExperimentConfig& c, std::size_t n, double gamma) {
  if (c.observable != "global") return kNaN;
  try {
    return ei_sync_flat_asymptotic(n, gamma, c.local_map().expansion_bound());
  } catch (const std::exception&) {
    return kNaN;
  }
}

SweepRow estimate_point(const ExperimentConfig& c, std::size_t n, double gamma, double epsilon, std::uint64_t seed,
                        std::size_t realization, bool with_gev) {
  SweepRow row;
  row.n = n;
  row.gamma = gamma;
  row.epsilon = epsilon;
  row.realization = realization;
  row.theta_theory = theory_value(c, n, gamma);
  row.theta_asymptotic = asymptotic_value(c, n, gamma);
  row.theta_suveges = row.theta_qk = row.xi_gpd = row.sigma_gpd = kNaN;
  row.xi_gev = row.mu_gev = row.sigma_gev = kNaN;

  TrajectoryConfig tc{c.map_spec(n, gamma)};
  tc.noise.intensity = epsilon;
  tc.length = c.length;
  tc.burn_in = c.burn_in;
  tc.seed = seed;
  tc.realization = realization;
  const Trajectory traj = simulate(tc);
  const ObservableSeries series = observe(traj, c.observable_spec(n), seed, epsilon);
  const auto& values = series.values;

  double threshold = 0.0;
  try {
    threshold = threshold_from_quantile(values, c.quantile);
  } catch (const std::exception& e) {
    add_note(row, "threshold", e);
    return row;
  }
  const auto indicator = exceedance_indicator(values, threshold);
  row.exceedances = static_cast<std::size_t>(std::count(indicator.begin(), indicator.end(), 1));

  try {
    const EiEstimate ei = suveges_ei(indicator, c.quantile);
    row.theta_suveges = ei.theta;
    if (ei.flagged) {
      row.flagged = true;
      row.note += (row.note.empty() ? "" : "; ") + std::string("suveges: ") + ei.note;
    }
  } catch (const std::exception& e) {
    add_note(row, "suveges", e);
  }

  try {
    QkOptions qo;
    qo.k_max = c.k_max;
    qo.k_sum = c.k_sum;
    row.theta_qk = qk_return_estimator(indicator, qo).theta;
  } catch (const std::exception& e) {
    add_note(row, "qk", e);
  }

  FitOptions fo;
  fo.min_samples = c.min_exceedances;
  try {
    std::vector<double> excess;
    for (double v : values)
      if (v > threshold && std::isfinite(v)) excess.push_back(v);
    const auto fit = fit_gpd_mle(excess, threshold, fo);
    row.xi_gpd = fit.xi;
    row.sigma_gpd = fit.sigma;
  } catch (const std::exception& e) {
    add_note(row, "gpd", e);
  }

  if (with_gev) {
    try {
      std::vector<double> maxima;
      for (double m : block_maxima(values, c.gev_block))
        if (std::isfinite(m)) maxima.push_back(m);
      const auto fit = fit_gev_mle(maxima, fo);
      row.xi_gev = fit.xi;
      row.mu_gev = fit.mu;
      row.sigma_gev = fit.sigma;
    } catch (const std::exception& e) {
      add_note(row, "gev", e);
    }
  }
  return row;
}

std::pair<SweepRow, SweepRow> aggregate(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("aggregate: no rows");
  SweepRow mean = rows.front();
  mean.kind = "mean";
  mean.realization = 0;
  mean.note.clear();
  mean.flagged = false;
  SweepRow sd = mean;
  sd.kind = "sd";

  double SweepRow::*columns[] = {&SweepRow::theta_suveges, &SweepRow::theta_qk,   &SweepRow::theta_theory,
                                 &SweepRow::theta_asymptotic, &SweepRow::xi_gpd,  &SweepRow::sigma_gpd,
                                 &SweepRow::xi_gev,        &SweepRow::mu_gev,     &SweepRow::sigma_gev};
  for (auto col : columns) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : rows)
      if (std::isfinite(r.*col)) {
        sum += r.*col;
        ++count;
      }
    const double m = count ? sum / static_cast<double>(count) : kNaN;
    double ss = 0.0;
    for (const auto& r : rows)
      if (std::isfinite(r.*col)) ss += (r.*col - m) * (r.*col - m);
    mean.*col = m;
    sd.*col = count > 1 ? std::sqrt(ss / static_cast<double>(count - 1)) : kNaN;
  }
  std::size_t finite = 0;
  double exceed = 0.0;
  for (const auto& r : rows) {
    if (std::isfinite(r.theta_suveges)) ++finite;
    exceed += static_cast<double>(r.exceedances);
    if (r.flagged) mean.flagged = sd.flagged = true;
  }
  mean.count = sd.count = finite;
  mean.exceedances = sd.exceedances = static_cast<std::size_t>(std::llround(exceed / static_cast<double>(rows.size())));
  if (mean.flagged) mean.note = sd.note = "some realizations flagged";
  return {mean, sd};
}

SweepTable run_ei_sweep(const ExperimentConfig& c, bool with_gev) {
  struct Task {
    std::size_t n, gi, ei, r;
  };
  std::vector<Task> tasks;
  for (std::size_t n : c.n)
    for (std::size_t gi = 0; gi < c.gamma.size(); ++gi)
      for (std::size_t ei = 0; ei < c.noise.size(); ++ei)
        for (std::size_t r = 0; r < c.realizations; ++r) tasks.push_back({n, gi, ei, r});

  std::vector<SweepRow> slots(tasks.size());
  parallel_for(tasks.size(), c.threads, [&](std::size_t i) {
    const Task& t = tasks[i];
    const double gamma = c.gamma[t.gi];
    const double eps = c.noise[t.ei];
    try {
      slots[i] = estimate_point(c, t.n, gamma, eps, point_seed(c.seed, t.n, t.gi, t.ei), t.r, with_gev);
    } catch (const std::exception& e) {
      SweepRow row;
      row.n = t.n;
      row.gamma = gamma;
      row.epsilon = eps;
      row.realization = t.r;
      row.theta_suveges = row.theta_qk = row.theta_theory = row.theta_asymptotic = kNaN;
      row.xi_gpd = row.sigma_gpd = row.xi_gev = row.mu_gev = row.sigma_gev = kNaN;
      add_note(row, "simulation", e);
      slots[i] = row;
    }
  });

  SweepTable table;
  table.with_gev = with_gev;
  for (std::size_t i = 0; i < slots.size(); i += c.realizations) {
    std::vector<SweepRow> group(slots.begin() + static_cast<std::ptrdiff_t>(i),
                                slots.begin() + static_cast<std::ptrdiff_t>(i + c.realizations));
    table.rows.insert(table.rows.end(), group.begin(), group.end());
    auto [mean, sd] = aggregate(group);
    table.rows.push_back(mean);
    table.rows.push_back(sd);
  }
  return table;
}

void write_sweep_csv(std::ostream& out, const SweepTable& table) {
  out << "kind,n,gamma,epsilon,realization,count,exceedances,theta_suveges,theta_qk,theta_theory,"
         "theta_asymptotic,xi_gpd,sigma_gpd";
  if (table.with_gev) out << ",xi_gev,mu_gev,sigma_gev";
  out << ",flagged,note\n";
  for (const auto& r : table.rows) {
    out << r.kind << ',' << r.n << ',' << format_double(r.gamma) << ',' << format_double(r.epsilon) << ','
        << r.realization << ',' << r.count << ',' << r.exceedances << ',' << format_double(r.theta_suveges) << ','
        << format_double(r.theta_qk) << ',' << format_double(r.theta_theory) << ','
        << format_double(r.theta_asymptotic) << ',' << format_double(r.xi_gpd) << ','
        << format_double(r.sigma_gpd);
    if (table.with_gev)
      out << ',' << format_double(r.xi_gev) << ',' << format_double(r.mu_gev) << ','
          << format_double(r.sigma_gev);
    out << ',' << (r.flagged ? 1 : 0) << ',' << csv_text(r.note) << '\n';
  }
}

std::vector<WaitingTimeReport> run_waiting_time_report(const ExperimentConfig& c) {
  struct Point {
    std::size_t n, gi, ei;
  };
  std::vector<Point> points;
  for (std::size_t n : c.n)
    for (std::size_t gi = 0; gi < c.gamma.size(); ++gi)
      for (std::size_t ei = 0; ei < c.noise.size(); ++ei) points.push_back({n, gi, ei});

  std::vector<WaitingTimeReport> reports(points.size());
  parallel_for(points.size(), c.threads, [&](std::size_t p) {
    const Point& pt = points[p];
    WaitingTimeReport& rep = reports[p];
    rep.n = pt.n;
    rep.gamma = c.gamma[pt.gi];
    rep.epsilon = c.noise[pt.ei];
    const std::uint64_t seed = point_seed(c.seed, pt.n, pt.gi, pt.ei);
    ClusterStats pooled;
    double theta_sum = 0.0;
    std::size_t theta_count = 0;
    for (std::size_t r = 0; r < c.realizations; ++r) {
      TrajectoryConfig tc{c.map_spec(pt.n, rep.gamma)};
      tc.noise.intensity = rep.epsilon;
      tc.length = c.length;
      tc.burn_in = c.burn_in;
      tc.seed = seed;
      tc.realization = r;
      const auto series = observe(simulate(tc), c.observable_spec(pt.n), seed, rep.epsilon);
      const double u = threshold_from_quantile(series.values, c.quantile);
      const auto ind = exceedance_indicator(series.values, u);
      const auto stats = extract_clusters(ind);
      pooled.exceedance_count += stats.exceedance_count;
      pooled.waiting_times.insert(pooled.waiting_times.end(), stats.waiting_times.begin(),
                                  stats.waiting_times.end());
      try {
        theta_sum += suveges_ei(ind, c.quantile).theta;
        ++theta_count;
      } catch (const std::exception&) {
      }
      if (r == 0) {
        const std::size_t len = std::min(c.excerpt, series.values.size());
        rep.excerpt.assign(series.values.begin(), series.values.begin() + static_cast<std::ptrdiff_t>(len));
        rep.excerpt_marks.assign(ind.begin(), ind.begin() + static_cast<std::ptrdiff_t>(len));
      }
    }
    rep.exceedances = pooled.exceedance_count;
    rep.theta_suveges = theta_count ? theta_sum / static_cast<double>(theta_count) : kNaN;
    if (pooled.waiting_times.empty()) throw NumericalError("waiting-times: no waiting times at " +
                                                           point_tag(rep.n, rep.gamma, rep.epsilon));
    rep.epdf = waiting_time_epdf(pooled);
    double mean = 0.0;
    std::size_t ones = 0;
    for (auto w : pooled.waiting_times) {
      mean += static_cast<double>(w);
      if (w == 1) ++ones;
    }
    mean /= static_cast<double>(pooled.waiting_times.size());
    rep.fraction_one = static_cast<double>(ones) / static_cast<double>(pooled.waiting_times.size());
    rep.geometric_p = 1.0 / mean;
  });
  return reports;
}

std::vector<CompoundPoissonReport> run_compound_poisson_check(const ExperimentConfig& c) {
  if (c.ensemble < 100) throw ConfigError("compound-poisson: ensemble of " + std::to_string(c.ensemble) +
                                          " trajectories is too small (need >= 100)");
  if (c.calibration < 1000) throw ConfigError("compound-poisson: calibration run too short");
  std::vector<CompoundPoissonReport> reports;
  for (std::size_t n : c.n) {
    for (std::size_t gi = 0; gi < c.gamma.size(); ++gi) {
      for (std::size_t ei = 0; ei < c.noise.size(); ++ei) {
        const double gamma = c.gamma[gi];
        const double eps = c.noise[ei];
        const std::uint64_t seed = point_seed(c.seed, n, gi, ei);
        TrajectoryConfig tc{c.map_spec(n, gamma)};
        tc.noise.intensity = eps;
        tc.seed = derive_seed({seed, 1});

        Simulator calib(tc);
        calib.advance(c.burn_in);
        const auto ind = in_strip(calib, c.calibration, c.accuracy);
        const auto hits = static_cast<double>(std::count(ind.begin(), ind.end(), 1));
        if (hits < 2) throw NumericalError("compound-poisson: calibration run visited the strip fewer than twice");
        const double mu = hits / static_cast<double>(c.calibration);
        const double theta = suveges_ei(ind, 1.0 - mu).theta;

        const double t_max = *std::max_element(c.t.begin(), c.t.end());
        const auto horizon_max = static_cast<std::size_t>(std::floor(t_max / mu));
        if (horizon_max > 50'000'000) throw ConfigError("compound-poisson: horizon too long; raise accuracy");
        std::vector<std::vector<std::size_t>> counts(c.ensemble, std::vector<std::size_t>(c.t.size()));
        parallel_for(c.ensemble, c.threads, [&](std::size_t m) {
          TrajectoryConfig mc = tc;
          mc.seed = derive_seed({seed, 2});
          mc.realization = m;
          Simulator sim(mc);
          sim.advance(c.burn_in);
          const auto visits = in_strip(sim, horizon_max + 1, c.accuracy);
          for (std::size_t ti = 0; ti < c.t.size(); ++ti) counts[m][ti] = count_visits(visits, mu, c.t[ti]);
        });

        for (std::size_t ti = 0; ti < c.t.size(); ++ti) {
          CompoundPoissonReport rep;
          rep.n = n;
          rep.gamma = gamma;
          rep.epsilon = eps;
          rep.t = c.t[ti];
          rep.accuracy = c.accuracy;
          rep.mu_strip = mu;
          rep.theta_hat = theta;
          rep.horizon = static_cast<std::size_t>(std::floor(rep.t / mu));
          rep.ensemble = c.ensemble;
          std::size_t kmax = 0;
          for (const auto& row : counts) kmax = std::max(kmax, row[ti]);
          const std::size_t support = kmax + 21;
          rep.empirical.assign(support, 0.0);
          for (const auto& row : counts) rep.empirical[row[ti]] += 1.0 / static_cast<double>(c.ensemble);
          const double p = std::clamp(1.0 - theta, 0.0, 1.0 - 1e-12);
          for (std::size_t k = 0; k < support; ++k) {
            rep.compound.push_back(compound_poisson_pmf(rep.t, p, k));
            rep.poisson.push_back(poisson_pmf(rep.t, k));
          }
          rep.tv_compound = total_variation(rep.empirical, rep.compound);
          rep.tv_poisson = total_variation(rep.empirical, rep.poisson);
          reports.push_back(std::move(rep));
        }
      }
    }
  }
  return reports;
}

std::vector<DensityFigure> run_density_figures(const ExperimentConfig& c) {
  std::vector<DensityFigure> figures;
  const double width = 1.0 / static_cast<double>(c.bins);
  if (c.band < width * (1.0 - 1e-12))
    throw ConfigError("density: band " + format_double(c.band) + " is narrower than one bin");
  const std::size_t groups = std::max<std::size_t>(1, std::min<std::size_t>(10, c.density_realizations));
  for (std::size_t n : c.n) {
    if (n != 2 && n != 3) throw ConfigError("density: lattice size must be 2 or 3");
    for (std::size_t gi = 0; gi < c.gamma.size(); ++gi) {
      DensityFigure fig;
      fig.n = n;
      fig.gamma = c.gamma[gi];
      const MapSpec spec = c.map_spec(n, fig.gamma);
      DensityHistogram total(n, c.bins);
      std::vector<DiagonalTrace> group_traces;
      for (std::size_t g = 0; g < groups; ++g) {
        DensityOptions o;
        const std::size_t lo = g * c.density_realizations / groups;
        const std::size_t hi = (g + 1) * c.density_realizations / groups;
        o.realizations = hi - lo;
        o.realization_offset = lo;
        o.iterations_each = c.density_iterations;
        o.bins = c.bins;
        o.burn_in = c.burn_in;
        o.seed = point_seed(c.seed, n, gi, 0);
        o.noise = c.noise.front();
        o.threads = c.threads;
        const auto part = estimate_density(spec, o);
        group_traces.push_back(diagonal_trace(part, c.band));
        total.merge(part);
      }
      fig.trace = diagonal_trace(total, c.band);
      fig.trace_stderr.assign(c.bins, kNaN);
      if (groups > 1) {
        for (std::size_t b = 0; b < c.bins; ++b) {
          double m = 0.0;
          for (const auto& t : group_traces) m += t.values[b];
          m /= static_cast<double>(groups);
          double ss = 0.0;
          for (const auto& t : group_traces) ss += (t.values[b] - m) * (t.values[b] - m);
          fig.trace_stderr[b] = std::sqrt(ss / static_cast<double>(groups - 1) / static_cast<double>(groups));
        }
      }
      fig.oscillation = trace_oscillation(fig.trace, diagonal_trace(total, 2.0 * c.band));
      fig.histogram = std::move(total);
      figures.push_back(std::move(fig));
    }
  }
  return figures;
}

std::vector<SpectralReport> run_spectral(const ExperimentConfig& c) {
  if (c.n.size() != 1 || c.n.front() != 2) throw ConfigError("spectral: only n = 2 is supported");
  std::vector<SpectralReport> reports;
  for (std::size_t gi = 0; gi < c.gamma.size(); ++gi) {
    SpectralReport rep;
    rep.gamma = c.gamma[gi];
    rep.k = c.ulam_k;
    UlamOptions uo;
    uo.k = c.ulam_k;
    uo.samples_per_axis = c.samples_per_axis;
    uo.seed = point_seed(c.seed, 2, gi, 0);
    uo.threads = c.threads;
    const auto op = build_ulam(c.map_spec(2, rep.gamma), uo);
    const auto density = invariant_density_ulam(op);
    rep.density_residual = density.residual;
    rep.ladder = ei_spectral_ladder(op, density, c.nu);
    rep.ladder.estimate.metadata.gamma = rep.gamma;
    rep.ladder.estimate.metadata.seed = c.seed;
    rep.second_eigenvalue = second_eigenvalue_modulus(op, 400, c.seed);
    reports.push_back(std::move(rep));
  }
  return reports;
}

namespace {

std::string save(const std::filesystem::path& dir, const std::string& name, const std::string& content,
                 std::vector<std::string>& files) {
  write_text_file(dir / name, content);
  files.push_back(name);
  return name;
}

}  // namespace

std::vector<std::string> write_sweep_outputs(const std::filesystem::path& dir, const SweepTable& table,
                                             const std::string& prefix) {
  std::vector<std::string> files;
  std::ostringstream s;
  write_sweep_csv(s, table);
  save(dir, prefix + (table.with_gev ? "gev_sweep.csv" : "ei_sweep.csv"), s.str(), files);
  return files;
}

std::vector<std::string> write_waiting_time_outputs(const std::filesystem::path& dir,
                                                    const std::vector<WaitingTimeReport>& reports,
                                                    const std::string& prefix) {
  std::vector<std::string> files;
  std::ostringstream summary;
  summary << "n,gamma,epsilon,exceedances,theta_suveges,fraction_one,geometric_p\n";
  for (const auto& r : reports) {
    const std::string tag = point_tag(r.n, r.gamma, r.epsilon);
    summary << r.n << ',' << format_double(r.gamma) << ',' << format_double(r.epsilon) << ',' << r.exceedances
            << ',' << format_double(r.theta_suveges) << ',' << format_double(r.fraction_one) << ','
            << format_double(r.geometric_p) << '\n';
    std::ostringstream epdf;
    epdf << "waiting_time,probability,log10_probability,geometric_reference\n";
    for (const auto& [w, p] : r.epdf) {
      const double geo = r.geometric_p * std::pow(1.0 - r.geometric_p, static_cast<double>(w) - 1.0);
      epdf << w << ',' << format_double(p) << ',' << format_double(std::log10(p)) << ',' << format_double(geo)
           << '\n';
    }
    save(dir, prefix + "epdf_" + tag + ".csv", epdf.str(), files);
    std::ostringstream series;
    series << "step,value,exceedance\n";
    for (std::size_t i = 0; i < r.excerpt.size(); ++i)
      series << i << ',' << format_double(r.excerpt[i]) << ',' << int(r.excerpt_marks[i]) << '\n';
    save(dir, prefix + "series_" + tag + ".csv", series.str(), files);
  }
  save(dir, prefix + "waiting_summary.csv", summary.str(), files);
  return files;
}

std::vector<std::string> write_compound_outputs(const std::filesystem::path& dir,
                                                const std::vector<CompoundPoissonReport>& reports,
                                                const std::string& prefix) {
  std::vector<std::string> files;
  std::ostringstream summary;
  summary << "n,gamma,epsilon,t,accuracy,mu_strip,theta_hat,horizon,ensemble,tv_compound,tv_poisson\n";
  for (const auto& r : reports) {
    summary << r.n << ',' << format_double(r.gamma) << ',' << format_double(r.epsilon) << ','
            << format_double(r.t) << ',' << format_double(r.accuracy) << ',' << format_double(r.mu_strip) << ','
            << format_double(r.theta_hat) << ',' << r.horizon << ',' << r.ensemble << ','
            << format_double(r.tv_compound) << ',' << format_double(r.tv_poisson) << '\n';
    std::ostringstream pmf;
    pmf << "k,empirical,compound_poisson,poisson\n";
    for (std::size_t k = 0; k < r.empirical.size(); ++k)
      pmf << k << ',' << format_double(r.empirical[k]) << ',' << format_double(r.compound[k]) << ','
          << format_double(r.poisson[k]) << '\n';
    save(dir, prefix + "counts_" + point_tag(r.n, r.gamma, r.epsilon) + "_t" + format_double(r.t) + ".csv",
         pmf.str(), files);
  }
  save(dir, prefix + "compound_poisson.csv", summary.str(), files);
  return files;
}

std::vector<std::string> write_density_outputs(const std::filesystem::path& dir,
                                               const std::vector<DensityFigure>& figures,
                                               const std::string& prefix) {
  std::vector<std::string> files;
  std::ostringstream summary;
  summary << "n,gamma,bins,band,samples,oscillation\n";
  for (const auto& f : figures) {
    const std::string tag = point_tag(f.n, f.gamma, 0.0);
    summary << f.n << ',' << format_double(f.gamma) << ',' << f.histogram.bins_per_axis() << ','
            << format_double(f.trace.band) << ',' << f.histogram.total_samples() << ','
            << format_double(f.oscillation) << '\n';
    std::ostringstream d;
    write_density_csv(d, f.histogram);
    save(dir, prefix + "density_" + tag + ".csv", d.str(), files);
    std::ostringstream t;
    t << "x,trace_value,trace_stderr\n";
    for (std::size_t i = 0; i < f.trace.grid.size(); ++i)
      t << format_double(f.trace.grid[i]) << ',' << format_double(f.trace.values[i]) << ','
        << format_double(f.trace_stderr[i]) << '\n';
    save(dir, prefix + "trace_" + tag + ".csv", t.str(), files);
  }
  save(dir, prefix + "density_summary.csv", summary.str(), files);
  return files;
}

std::vector<std::string> write_spectral_outputs(const std::filesystem::path& dir,
                                                const std::vector<SpectralReport>& reports,
                                                const std::string& prefix) {
  std::vector<std::string> files;
  std::ostringstream ladder;
  ladder << "gamma,k,nu,rho,mu_strip,theta_raw,hole_cells,boundary_cells\n";
  nlohmann::ordered_json all = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    for (const auto& s : r.ladder.steps) {
      ladder << format_double(r.gamma) << ',' << r.k << ',' << format_double(s.nu) << ',' << format_double(s.rho)
             << ',' << format_double(s.mu_strip) << ',' << format_double(s.theta_raw) << ',' << s.hole_cells
             << ',' << s.boundary_cells << '\n';
      steps.push_back(nlohmann::ordered_json::parse(spectral_json(r.k, s)));
    }
    nlohmann::ordered_json j;
    j["gamma"] = r.gamma;
    j["k"] = r.k;
    j["theta_finest"] = r.ladder.theta_finest;
    j["theta_extrapolated"] = r.ladder.theta_extrapolated;
    j["second_eigenvalue_modulus"] = r.second_eigenvalue;
    j["density_residual"] = r.density_residual;
    j["ladder"] = steps;
    all.push_back(j);
  }
  save(dir, prefix + "spectral_ladder.csv", ladder.str(), files);
  save(dir, prefix + "spectral.json", all.dump(2) + "\n", files);
  return files;
}

std::vector<std::string> write_simulation_outputs(const std::filesystem::path& dir, const ExperimentConfig& c,
                                                  const std::string& prefix) {
  std::vector<std::string> files;
  for (std::size_t n : c.n) {
    for (std::size_t gi = 0; gi < c.gamma.size(); ++gi) {
      for (std::size_t ei = 0; ei < c.noise.size(); ++ei) {
        const std::uint64_t seed = point_seed(c.seed, n, gi, ei);
        for (std::size_t r = 0; r < c.realizations; ++r) {
          TrajectoryConfig tc{c.map_spec(n, c.gamma[gi])};
          tc.noise.intensity = c.noise[ei];
          tc.length = c.length;
          tc.burn_in = c.burn_in;
          tc.seed = seed;
          tc.realization = r;
          const auto traj = simulate(tc);
          const std::string tag = point_tag(n, c.gamma[gi], c.noise[ei]) + "_r" + std::to_string(r);
          std::ostringstream t;
          write_trajectory_csv(t, traj);
          save(dir, prefix + "trajectory_" + tag + ".csv", t.str(), files);
          std::ostringstream s;
          write_series_csv(s, observe(traj, c.observable_spec(n), seed, c.noise[ei]).values);
          save(dir, prefix + "series_" + tag + ".csv", s.str(), files);
        }
      }
    }
  }
  return files;
}

std::vector<std::string> write_theory_outputs(const std::filesystem::path& dir, const ExperimentConfig& c,
                                              const std::string& prefix) {
  std::vector<std::string> files;
  std::ostringstream out;
  out << "n,gamma,theta_theory,theta_asymptotic,leb_ratio,accuracy,log10_iterations_half\n";
  for (std::size_t n : c.n) {
    for (double g : c.gamma) {
      const double theta = theory_value(c, n, g);
      double log10_m = kNaN;
      if (std::isfinite(theta) && theta > 0.0) log10_m = iterations_for_sync(0.5, c.accuracy, n, theta).log10_m;
      out << n << ',' << format_double(g) << ',' << format_double(theta) << ','
          << format_double(asymptotic_value(c, n, g)) << ',' << format_double(leb_ratio(n, g)) << ','
          << format_double(c.accuracy) << ',' << format_double(log10_m) << '\n';
    }
  }
  save(dir, prefix + "theory.csv", out.str(), files);
  return files;
}

void write_manifest(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& config,
                    std::vector<std::string> files) {
  ExperimentConfig normalized = config;
  normalized.out = ".";
  normalized.threads = 1;
  std::sort(files.begin(), files.end());
  nlohmann::ordered_json j;
  j["command"] = command;
  j["seed"] = config.seed;
  j["quantile_convention"] = kQuantileConvention;
  j["config"] = to_text(normalized);
  j["files"] = files;
  write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

std::vector<FigurePart> figure_parts(const std::string& id, const ExperimentConfig& base) {
  ExperimentConfig c;
  c.seed = base.seed;
  c.threads = base.threads;
  c.out = base.out;
  c.full_scale = base.full_scale;
  const bool full = base.full_scale;
  auto gamma_range = [](double step) {
    std::vector<double> g;
    for (std::size_t i = 0; static_cast<double>(i) * step < 2.0 / 3.0 - 1e-9; ++i)
      g.push_back(std::round(static_cast<double>(i) * step * 1e12) / 1e12);
    return g;
  };
  auto n_range = [&](std::size_t hi) {
    std::vector<std::size_t> n;
    for (std::size_t v = 4; v <= hi; ++v) n.push_back(v);
    return n;
  };
  std::vector<FigurePart> parts;
  if (id == "dens1" || id == "dens") {
    c.n = {id == "dens1" ? std::size_t{2} : std::size_t{3}};
    c.gamma = {0.3, 0.5, 0.6};
    c.density_realizations = 300;
    c.density_iterations = full ? (id == "dens1" ? 10'000'000 : 1'000'000) : 10'000;
    c.bins = id == "dens1" ? 100 : 30;
    c.band = id == "dens1" ? 0.02 : 0.04;
    parts.push_back({"density", id + "_", c});
  } else if (id == "d32") {
    c.gamma = gamma_range(0.02);
    c.realizations = 10;
    for (std::size_t n : {2, 3}) {
      c.n = {n};
      parts.push_back({"sweep", "d32_n" + std::to_string(n) + "_", c});
    }
  } else if (id == "CLM_t") {
    c.n = n_range(full ? 52 : 22);
    c.gamma = gamma_range(0.02);
    c.realizations = 1;
    parts.push_back({"sweep", "CLM_t_", c});
  } else if (id == "CLM" || id == "CLM_csi") {
    c.n = n_range(full ? 52 : 22);
    c.gamma = gamma_range(full ? 0.02 : 0.04);
    c.noise = {0.0, 1e-4, 1e-2};
    c.realizations = 1;
    for (const char* obs : {"global", "local"}) {
      c.observable = obs;
      parts.push_back({id == "CLM" ? "sweep" : "gev-sweep", id + "_" + obs + "_", c});
    }
  } else if (id == "global_Poisson" || id == "local_Poisson") {
    c.n = {4};
    c.gamma = {0.3};
    c.noise = {0.0, 1e-4, 1e-2};
    c.realizations = 10;
    c.observable = id == "global_Poisson" ? "global" : "local";
    parts.push_back({"waiting-times", id + "_", c});
  } else {
    throw ConfigError("unknown figure id '" + id + "'");
  }
  return parts;
}

std::vector<std::string> reproduce(const std::string& id, const ExperimentConfig& base) {
  const auto parts = figure_parts(id, base);
  const std::filesystem::path dir = std::filesystem::path(base.out) / id;
  std::vector<std::string> files;
  for (const auto& part : parts) {
    std::vector<std::string> written;
    if (part.pipeline == "sweep" || part.pipeline == "gev-sweep") {
      const auto table = run_ei_sweep(part.config, part.pipeline == "gev-sweep");
      written = write_sweep_outputs(dir, table, part.prefix);
      if (id == "CLM_t") {
        std::ostringstream a;
        a << "n,gamma,theta_asymptotic\n";
        for (std::size_t n : part.config.n)
          for (double g : part.config.gamma)
            a << n << ',' << format_double(g) << ',' << format_double(asymptotic_value(part.config, n, g)) << '\n';
        save(dir, part.prefix + "asymptotic.csv", a.str(), written);
      }
    } else if (part.pipeline == "density") {
      written = write_density_outputs(dir, run_density_figures(part.config), part.prefix);
    } else {
      written = write_waiting_time_outputs(dir, run_waiting_time_report(part.config), part.prefix);
    }
    files.insert(files.end(), written.begin(), written.end());
  }
  write_manifest(dir, "reproduce " + id, base, files);
  files.push_back("manifest.json");
  return files;
}

}  // namespace cml
