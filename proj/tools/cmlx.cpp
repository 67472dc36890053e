// Command-line driver for the coupled map lattice experiments.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cml/config.hpp"
#include "cml/error.hpp"
#include "cml/experiment.hpp"
#include "cml/io.hpp"
#include "cml/kernels.hpp"

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out;
  std::vector<std::string> set;
  std::string kernels = "auto";
};

cml::ExperimentConfig resolve(const GlobalFlags& g) {
  std::vector<std::string> warnings;
  std::string text;
  if (!g.config.empty()) text = cml::to_text(cml::load_config(g.config, &warnings));
  for (const auto& kv : g.set) text += kv + "\n";
  warnings.clear();
  auto c = cml::parse_config(text, &warnings);
  if (g.seed) c.seed = *g.seed;
  if (g.threads) c.threads = *g.threads;
  if (!g.out.empty()) c.out = g.out;
  for (const auto& w : cml::validate(c)) std::cerr << "warning: " << w << '\n';
  return c;
}

void finish(const std::filesystem::path& dir, const std::string& command, const cml::ExperimentConfig& c,
            const std::vector<std::string>& files) {
  cml::write_manifest(dir, command, c, files);
  std::cout << command << ": wrote " << files.size() + 1 << " files to " << dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extreme value statistics of synchronization in coupled map lattices"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config, "key = value config file or a manifest.json");
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output directory");
  app.add_option("--set", g.set, "extra config line, e.g. --set 'n = 2,3'");
  app.add_option("--kernels", g.kernels, "kernel variant")->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  auto* simulate = app.add_subcommand("simulate", "write trajectories and observable series");
  auto* ei_sweep = app.add_subcommand("ei-sweep", "extremal index over the (n, gamma, noise) grid");
  auto* gev_sweep = app.add_subcommand("gev-sweep", "GPD and GEV shape parameters over the grid");
  auto* waiting = app.add_subcommand("waiting-times", "waiting-time EPDFs and series excerpts");
  auto* compound = app.add_subcommand("compound-poisson", "strip visit counts against the counting laws");
  auto* density = app.add_subcommand("density", "invariant density histograms and diagonal traces");
  auto* spectral = app.add_subcommand("spectral", "Ulam operator and extremal index from its hole eigenvalue");
  auto* theory = app.add_subcommand("theory", "closed-form extremal indices and waiting times");
  auto* repro = app.add_subcommand("reproduce", "data for one figure at desk scale");
  std::string figure;
  repro->add_option("figure_id", figure, "figure id")->required()->check(CLI::IsMember(cml::figure_ids()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!cml::kernels::select(g.kernels)) throw cml::ConfigError("kernel variant '" + g.kernels + "' unavailable");
    const auto c = resolve(g);
    const std::filesystem::path dir = c.out;
    if (*simulate) {
      finish(dir, "simulate", c, cml::write_simulation_outputs(dir, c));
    } else if (*ei_sweep) {
      finish(dir, "ei-sweep", c, cml::write_sweep_outputs(dir, cml::run_ei_sweep(c, false)));
    } else if (*gev_sweep) {
      finish(dir, "gev-sweep", c, cml::write_sweep_outputs(dir, cml::run_ei_sweep(c, true)));
    } else if (*waiting) {
      finish(dir, "waiting-times", c, cml::write_waiting_time_outputs(dir, cml::run_waiting_time_report(c)));
    } else if (*compound) {
      const auto reports = cml::run_compound_poisson_check(c);
      for (const auto& r : reports)
        std::cout << cml::point_tag(r.n, r.gamma, r.epsilon) << " t=" << cml::format_double(r.t)
                  << " theta=" << cml::format_double(r.theta_hat) << " TV(compound)="
                  << cml::format_double(r.tv_compound) << " TV(poisson)=" << cml::format_double(r.tv_poisson)
                  << '\n';
      finish(dir, "compound-poisson", c, cml::write_compound_outputs(dir, reports));
    } else if (*density) {
      finish(dir, "density", c, cml::write_density_outputs(dir, cml::run_density_figures(c)));
    } else if (*spectral) {
      const auto reports = cml::run_spectral(c);
      for (const auto& r : reports)
        std::cout << "gamma=" << cml::format_double(r.gamma) << " k=" << r.k
                  << " theta_finest=" << cml::format_double(r.ladder.theta_finest)
                  << " theta_extrapolated=" << cml::format_double(r.ladder.theta_extrapolated) << '\n';
      finish(dir, "spectral", c, cml::write_spectral_outputs(dir, reports));
    } else if (*theory) {
      const auto files = cml::write_theory_outputs(dir, c);
      std::cout << cml::read_text_file(dir / files.front());
      finish(dir, "theory", c, files);
    } else if (*repro) {
      const auto files = cml::reproduce(figure, c);
      std::cout << "reproduce " << figure << ": wrote " << files.size() << " files to "
                << (std::filesystem::path(c.out) / figure).string() << '\n';
    }
  } catch (const cml::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const cml::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const cml::HypothesisError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
