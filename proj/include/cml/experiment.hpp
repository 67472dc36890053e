#pragma once

// Sweeps over (n, gamma, noise) grids, figure data export and the run
// manifest. Every grid point draws its random streams from seeds derived
// from the master seed and the point's grid indices, so results do not
// depend on thread count or completion order.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cml/config.hpp"
#include "cml/density.hpp"
#include "cml/spectral.hpp"

namespace cml {

struct SweepRow {
  /// "realization", "mean" or "sd".
  std::string kind = "realization";
  std::size_t n = 0;
  double gamma = 0.0;
  double epsilon = 0.0;
  std::size_t realization = 0;
  /// Rows entering an aggregate (1 for realization rows).
  std::size_t count = 1;
  std::size_t exceedances = 0;
  double theta_suveges = 0.0;
  double theta_qk = 0.0;
  double theta_theory = 0.0;
  double theta_asymptotic = 0.0;
  double xi_gpd = 0.0;
  double sigma_gpd = 0.0;
  double xi_gev = 0.0;
  double mu_gev = 0.0;
  double sigma_gev = 0.0;
  bool flagged = false;
  std::string note;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  bool with_gev = false;
};

/// Seed of grid point (n, gamma index, noise index); realizations index the
/// streams below it.
std::uint64_t point_seed(std::uint64_t master, std::size_t n, std::size_t gamma_index,
                         std::size_t noise_index);

/// Theory value for the configured observable, NaN where none applies.
double theory_value(const ExperimentConfig& config, std::size_t n, double gamma);
/// 1 - (lambda / (1 - gamma))^(n-1) for the global observable, NaN otherwise.
double asymptotic_value(const ExperimentConfig& config, std::size_t n, double gamma);

/// One trajectory, its observable series and all estimators. Estimator
/// failures set `flagged` and leave NaN in the affected columns.
SweepRow estimate_point(const ExperimentConfig& config, std::size_t n, double gamma, double epsilon,
                        std::uint64_t seed, std::size_t realization, bool with_gev = false);

/// Realization rows in grid order, each grid point followed by its mean and
/// sd rows (finite values only).
SweepTable run_ei_sweep(const ExperimentConfig& config, bool with_gev = false);

/// Mean and sample sd rows recomputed from the realization rows of one point.
std::pair<SweepRow, SweepRow> aggregate(const std::vector<SweepRow>& realizations);

void write_sweep_csv(std::ostream& out, const SweepTable& table);

struct WaitingTimeReport {
  std::size_t n = 0;
  double gamma = 0.0;
  double epsilon = 0.0;
  std::size_t exceedances = 0;
  double theta_suveges = 0.0;
  /// Share of waiting times equal to 1.
  double fraction_one = 0.0;
  /// Parameter of the geometric law with the same mean waiting time.
  double geometric_p = 0.0;
  std::vector<std::pair<std::size_t, double>> epdf;
  /// Observable excerpt of realization 0 and its exceedance marks.
  std::vector<double> excerpt;
  std::vector<std::uint8_t> excerpt_marks;
};

/// Waiting times pooled over realizations, per grid point.
std::vector<WaitingTimeReport> run_waiting_time_report(const ExperimentConfig& config);

struct CompoundPoissonReport {
  std::size_t n = 0;
  double gamma = 0.0;
  double epsilon = 0.0;
  double t = 0.0;
  double accuracy = 0.0;
  double mu_strip = 0.0;
  double theta_hat = 0.0;
  std::size_t horizon = 0;
  std::size_t ensemble = 0;
  std::vector<double> empirical;
  std::vector<double> compound;
  std::vector<double> poisson;
  double tv_compound = 0.0;
  double tv_poisson = 0.0;
};

/// A calibration run of config.calibration steps estimates the strip mass
/// and theta; an ensemble of config.ensemble trajectories then gives the
/// empirical law of count_visits at each t.
std::vector<CompoundPoissonReport> run_compound_poisson_check(const ExperimentConfig& config);

struct DensityFigure {
  std::size_t n = 0;
  double gamma = 0.0;
  DensityHistogram histogram{2, 1};
  DiagonalTrace trace;
  /// Standard error of the trace across realization groups.
  std::vector<double> trace_stderr;
  double oscillation = 0.0;
};

std::vector<DensityFigure> run_density_figures(const ExperimentConfig& config);

struct SpectralReport {
  double gamma = 0.0;
  std::size_t k = 0;
  SpectralLadder ladder;
  double second_eigenvalue = 0.0;
  double density_residual = 0.0;
};

std::vector<SpectralReport> run_spectral(const ExperimentConfig& config);

/// Writers return the names of the files created in `dir`; `prefix` is
/// prepended to every name.
std::vector<std::string> write_sweep_outputs(const std::filesystem::path& dir, const SweepTable& table,
                                             const std::string& prefix = "");
std::vector<std::string> write_waiting_time_outputs(const std::filesystem::path& dir,
                                                    const std::vector<WaitingTimeReport>& reports,
                                                    const std::string& prefix = "");
std::vector<std::string> write_compound_outputs(const std::filesystem::path& dir,
                                                const std::vector<CompoundPoissonReport>& reports,
                                                const std::string& prefix = "");
std::vector<std::string> write_density_outputs(const std::filesystem::path& dir,
                                               const std::vector<DensityFigure>& figures,
                                               const std::string& prefix = "");
std::vector<std::string> write_spectral_outputs(const std::filesystem::path& dir,
                                                const std::vector<SpectralReport>& reports,
                                                const std::string& prefix = "");
/// Trajectory and observable series CSVs for every grid point and realization.
std::vector<std::string> write_simulation_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                                                  const std::string& prefix = "");
/// Closed-form values over the configured (n, gamma) grid.
std::vector<std::string> write_theory_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                                              const std::string& prefix = "");

/// manifest.json: command, embedded config (output directory and thread
/// count normalized away), quantile convention and the data file list.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& config,
                    std::vector<std::string> files);

inline const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"dens1", "dens",          "d32",           "CLM_t",
                                            "CLM",   "CLM_csi",       "global_Poisson", "local_Poisson"};
  return ids;
}

/// One run contributing to a figure: which pipeline, its configuration and
/// the prefix of its files.
struct FigurePart {
  /// "sweep", "gev-sweep", "density" or "waiting-times".
  std::string pipeline;
  std::string prefix;
  ExperimentConfig config;
};

/// Desk-scale runs of a figure; seed, threads, out and full_scale are taken
/// from `base`. Throws ConfigError for an unknown id.
std::vector<FigurePart> figure_parts(const std::string& figure_id, const ExperimentConfig& base);

/// Runs a figure into base.out / figure_id.
std::vector<std::string> reproduce(const std::string& figure_id, const ExperimentConfig& base);

/// Short tag for file names, e.g. n2_g0.3_e0.
std::string point_tag(std::size_t n, double gamma, double epsilon);

}  // namespace cml
