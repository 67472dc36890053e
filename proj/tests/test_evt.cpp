#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cml/error.hpp"
#include "cml/evt.hpp"
#include "cml/rng.hpp"

using namespace cml;

namespace {

std::vector<std::uint8_t> marks(std::size_t length, std::initializer_list<std::size_t> at) {
  std::vector<std::uint8_t> v(length, 0);
  for (auto i : at) v[i] = 1;
  return v;
}

std::vector<double> gumbel_sample(std::size_t n, double mu, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = mu - sigma * std::log(-std::log(1.0 - rng.uniform()));
  return v;
}

}  // namespace

TEST_CASE("GEV and GPD distribution functions") {
  CHECK(gev_cdf(0.0, 0.0, 1.0, 0.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(gev_cdf(1.0, 0.0, 1.0, 0.5) == doctest::Approx(std::exp(-std::pow(1.5, -2.0))));
  CHECK(gev_cdf(0.3, 0.0, 1.0, 1e-9) == doctest::Approx(gev_cdf(0.3, 0.0, 1.0, 0.0)).epsilon(1e-7));
  CHECK(gev_cdf(-3.0, 0.0, 1.0, 0.5) == 0.0);
  CHECK(gev_cdf(3.0, 0.0, 1.0, -0.5) == 1.0);
  CHECK(gpd_cdf(1.0, 1.0, 0.0) == doctest::Approx(1.0 - std::exp(-1.0)));
  CHECK(gpd_cdf(1.0, 2.0, 0.5) == doctest::Approx(1.0 - std::pow(1.25, -2.0)));
  CHECK(gpd_log_density(0.5, 1.0, 0.0) == doctest::Approx(-0.5));
  CHECK(gev_log_density(0.0, 0.0, 1.0, 0.0) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(gev_cdf(0.0, 0.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("GEV fit recovers a Gumbel sample") {
  const auto sample = gumbel_sample(4000, 2.0, 0.5, 17);
  const auto fit = fit_gev_mle(sample);
  CHECK(std::fabs(fit.xi) < 0.05);
  CHECK(fit.mu == doctest::Approx(2.0).epsilon(0.03));
  CHECK(fit.sigma == doctest::Approx(0.5).epsilon(0.05));
  CHECK(fit.log_likelihood >= fit.initial_log_likelihood - 1e-9);
  REQUIRE(fit.standard_errors);
  CHECK((*fit.standard_errors)[0] > 0.0);
  CHECK(fit.n_samples == 4000);
}

TEST_CASE("GPD fit of exponential excesses has zero shape") {
  Rng rng(5);
  std::vector<double> values(3000);
  for (auto& v : values) v = 1.0 - 0.7 * std::log(1.0 - rng.uniform());
  const auto fit = fit_gpd_mle(values, 1.0);
  CHECK(std::fabs(fit.xi) < 0.06);
  CHECK(fit.sigma == doctest::Approx(0.7).epsilon(0.06));
  CHECK(fit.mu == 1.0);
}

TEST_CASE("fits reject small or degenerate samples") {
  CHECK_THROWS_AS(fit_gev_mle(std::vector<double>(10, 1.0)), NumericalError);
  CHECK_THROWS_AS(fit_gev_mle(std::vector<double>(100, 1.0)), NumericalError);
  CHECK_THROWS_AS(fit_gpd_mle(std::vector<double>{2.0, 3.0}, 1.0), NumericalError);
  CHECK_THROWS_AS(fit_gpd_mle(std::vector<double>{0.5, 3.0}, 1.0), std::invalid_argument);
}

TEST_CASE("block maxima drop the partial block") {
  const std::vector<double> s{1, 5, 2, 3, 9, 4, 7};
  CHECK(block_maxima(s, 3) == std::vector<double>{5, 9});
}

TEST_CASE("run clusters and waiting times") {
  const auto st = extract_clusters(marks(20, {1, 2, 3, 7, 10, 11}));
  CHECK(st.exceedance_count == 6);
  CHECK(st.cluster_count == 2);
  CHECK(st.cluster_sizes == std::vector<std::size_t>{3, 2});
  CHECK(st.waiting_times == std::vector<std::size_t>{1, 1, 4, 3, 1});
  const auto epdf = waiting_time_epdf(st);
  REQUIRE(epdf.size() == 3);
  CHECK(epdf[0].first == 1);
  CHECK(epdf[0].second == doctest::Approx(0.6));
}

TEST_CASE("Suveges estimator on a hand-computed sequence") {
  // Gaps 1, 1, 38, 40: S = {0, 0, 37, 39}, N = 4, N_c = 2, A = 0.02 * 76.
  const auto est = suveges_ei(marks(100, {10, 11, 12, 50, 90}), 0.98);
  const double a = 0.02 * 76.0;
  const double b = a + 4.0 + 2.0;
  CHECK(est.theta == doctest::Approx((b - std::sqrt(b * b - 16.0 * a)) / (2.0 * a)));
  CHECK(est.theta == doctest::Approx(0.6062).epsilon(1e-3));
  CHECK_FALSE(est.flagged);
}

TEST_CASE("Suveges estimator degenerate inputs") {
  auto single = suveges_ei(marks(50, {7}), 0.98);
  CHECK(single.theta == 1.0);
  CHECK(single.flagged);
  auto all = suveges_ei(std::vector<std::uint8_t>(50, 1), 0.98);
  CHECK(all.theta == 0.0);
  CHECK(all.flagged);
  CHECK_THROWS_AS(suveges_ei(std::vector<std::uint8_t>(50, 0), 0.98), NumericalError);
}

TEST_CASE("Suveges estimator on independent exceedances is near one") {
  Rng rng(23);
  std::vector<std::uint8_t> ind(200000);
  for (auto& v : ind) v = rng.uniform() < 0.02 ? 1 : 0;
  CHECK(suveges_ei(ind, 0.98).theta == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("Suveges estimator on geometric clusters") {
  // Cluster starts at rate 0.01, sizes geometric with mean 2: theta = 1/2.
  Rng rng(29);
  std::vector<std::uint8_t> ind(400000, 0);
  for (std::size_t k = 0; k < ind.size();) {
    if (rng.uniform() < 0.01) {
      do ind[k++] = 1;
      while (k < ind.size() && rng.uniform() < 0.5);
      k += 1;
    } else {
      ++k;
    }
  }
  double share = 0.0;
  for (auto v : ind) share += v;
  share /= static_cast<double>(ind.size());
  CHECK(suveges_ei(ind, 1.0 - share).theta == doctest::Approx(0.5).epsilon(0.06));
}

TEST_CASE("q_k return estimator") {
  // Visits every 3 steps: the first return always takes 3 steps.
  std::vector<std::uint8_t> ind(3000, 0);
  for (std::size_t k = 0; k < ind.size(); k += 3) ind[k] = 1;
  QkOptions opt;
  opt.k_max = 5;
  opt.k_sum = 2;
  const auto est = qk_return_estimator(ind, opt);
  CHECK(est.q[2] == 1.0);
  CHECK(est.theta == 0.0);
  opt.k_sum = 1;
  CHECK(qk_return_estimator(ind, opt).theta == 1.0);
  opt.k_sum = 6;
  CHECK_THROWS_AS(qk_return_estimator(ind, opt), std::invalid_argument);
  opt.k_sum = 0;
  opt.min_visits = 5000;
  CHECK_THROWS_AS(qk_return_estimator(ind, opt), NumericalError);
}

TEST_CASE("q_0 estimates the extremal index on clustered data") {
  Rng rng(31);
  std::vector<std::uint8_t> ind(300000, 0);
  for (std::size_t k = 0; k < ind.size();) {
    if (rng.uniform() < 0.01) {
      do ind[k++] = 1;
      while (k < ind.size() && rng.uniform() < 0.4);
      k += 1;
    } else {
      ++k;
    }
  }
  CHECK(qk_return_estimator(ind).theta == doctest::Approx(0.6).epsilon(0.05));
}

TEST_CASE("Poisson and compound Poisson laws") {
  CHECK(std::fabs(poisson_pmf(5.0, 5) - 0.17547) < 1e-5);
  CHECK(poisson_pmf(0.0, 0) == 1.0);
  CHECK(poisson_pmf(0.0, 3) == 0.0);
  const double t = 2.0, p = 0.3;
  CHECK(compound_poisson_pmf(t, p, 0) == doctest::Approx(std::exp(-t * (1 - p))));
  CHECK(compound_poisson_pmf(t, p, 1) == doctest::Approx(std::exp(-t * (1 - p)) * (1 - p) * (1 - p) * t));
  for (std::size_t k = 0; k < 30; ++k) CHECK(std::fabs(compound_poisson_pmf(t, 0.0, k) - poisson_pmf(t, k)) <= 1e-14);
  double mean = 0.0, total = 0.0;
  for (std::size_t k = 0; k < 200; ++k) {
    const double pk = compound_poisson_pmf(t, p, k);
    total += pk;
    mean += static_cast<double>(k) * pk;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mean == doctest::Approx(t).epsilon(1e-10));
  CHECK_THROWS_AS(compound_poisson_pmf(t, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(poisson_pmf(-1.0, 1), std::invalid_argument);
}

TEST_CASE("count_visits and total variation") {
  const auto ind = marks(10, {0, 1, 4, 9});
  CHECK(count_visits(ind, 0.5, 2.0) == 2);  // steps 1..4
  CHECK(count_visits(ind, 0.5, 4.5) == 3);  // steps 1..9
  CHECK_THROWS_AS(count_visits(ind, 0.5, 5.0), std::invalid_argument);
  CHECK(total_variation(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0}) == doctest::Approx(0.5));
  CHECK(total_variation(std::vector<double>{0.2, 0.8}, std::vector<double>{0.2, 0.8}) == 0.0);
}

TEST_CASE("visit counts of two uncoupled maps follow the compound law") {
  // gamma = 0, n = 2: returns to the strip cluster with p = 1/3, so the
  // counting law is compound Poisson rather than Poisson.
  const MapSpec spec(LocalMap::affine_mod1(3), 2, 0.0);
  const double accuracy = 0.01;
  const double mu = 2 * accuracy - accuracy * accuracy;
  const double t = 1.0;
  const std::size_t members = 6000;
  std::vector<double> empirical(40, 0.0);
  for (std::size_t m = 0; m < members; ++m) {
    TrajectoryConfig cfg{spec};
    cfg.seed = 77;
    cfg.realization = m;
    cfg.burn_in = 100;
    cfg.length = static_cast<std::size_t>(t / mu) + 1;
    const auto traj = simulate(cfg);
    const auto k = count_visits(strip_indicator(traj, accuracy), mu, t);
    empirical[std::min<std::size_t>(k, 39)] += 1.0 / members;
  }
  std::vector<double> compound, poisson;
  for (std::size_t k = 0; k < 40; ++k) {
    compound.push_back(compound_poisson_pmf(t, 1.0 / 3.0, k));
    poisson.push_back(poisson_pmf(t, k));
  }
  const double tv_c = total_variation(empirical, compound);
  const double tv_p = total_variation(empirical, poisson);
  CHECK(tv_c < 0.05);
  CHECK(tv_c < tv_p);
}

TEST_CASE("JSON record") {
  EiEstimate e;
  e.theta = 0.5;
  e.metadata.n = 2;
  e.metadata.quantile = 0.98;
  const auto s = to_json(e);
  CHECK(s.find("\"method\":\"suveges\"") != std::string::npos);
  CHECK(s.find("\"xi\":null") != std::string::npos);
  EvtFitResult fit;
  fit.xi = 0.1;
  CHECK(to_json(e, fit).find("\"xi\":0.1") != std::string::npos);
}
