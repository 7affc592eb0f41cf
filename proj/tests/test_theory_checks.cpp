#include <catch2/catch_amalgamated.hpp>

#include "sge/theory_checks.hpp"

using namespace sge;

namespace {

std::vector<Vec> random_points(std::size_t count, std::size_t dim, double scale,
                               Rng& rng) {
  std::uniform_real_distribution<double> unif(-scale, scale);
  std::vector<Vec> pts(count, Vec(dim));
  for (auto& p : pts)
    for (auto& v : p) v = unif(rng);
  return pts;
}

}  // namespace

TEST_CASE("inner product error lower bound values") {
  CHECK(ip_error_lower_bound(1, 1.0) == 2.0 / 3.0);
  CHECK(ip_error_lower_bound(2, 1.0) == 4.0 / 3.0);
  CHECK(ip_error_lower_bound(3, 0.0) == 0.0);
  CHECK(ip_error_lower_bound(4, 0.5) == 8.0 * 0.25 / 3.0);
  CHECK_THROWS_AS(ip_error_lower_bound(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ip_error_lower_bound(1, -1.0), std::invalid_argument);
}

TEST_CASE("planted bias-augmented features represent the distance surface exactly") {
  const auto rep = lower_bound_experiment(2, 1.0, 4, /*train_budget=*/5,
                                    /*mc_samples=*/2000, 7);
  CHECK(rep.bound == 4.0 / 3.0);
  CHECK(rep.planted_sips_error <= 1e-10);
  CHECK(rep.estimated_ips_error >= 0.0);
  CHECK(rep.estimated_sips_error >= 0.0);
  CHECK(rep.mc_samples == 2000);
  CHECK_THROWS_AS(lower_bound_experiment(1, 1.0, 1, 5, 100, 1), std::invalid_argument);
  CHECK_THROWS_AS(lower_bound_experiment(1, 1.0, 4, 5, 1, 1), std::invalid_argument);
}

TEST_CASE("monte carlo standard error shrinks like the square root of the sample count") {
  auto zero_score = [](const Vec&, const Vec&) { return 0.0; };
  Rng rng(19);
  const auto small = detail::mc_l1_error_vs_nsd(zero_score, 2, 1.0, 20000, rng);
  const auto large = detail::mc_l1_error_vs_nsd(zero_score, 2, 1.0, 320000, rng);
  const double ratio = small.stderr_ / large.stderr_;  // expect ~4
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.0);
  CHECK_THAT(small.mean, Catch::Matchers::WithinAbs(large.mean, 6 * small.stderr_));
}

TEST_CASE("shift decomposition is an exact identity") {
  Rng rng(3);
  const std::vector<Kernel> kernels{Kernel::inner_product(), Kernel::nsd(),
                                    Kernel::cosine()};
  for (const auto& k : kernels) {
    for (int trial = 0; trial < 30; ++trial) {
      const auto pts = random_points(8, 3, 2.0, rng);
      const Vec y0 = random_points(1, 3, 2.0, rng)[0];
      CHECK(shift_decomposition_check(k, pts, y0) <= 1e-12);
    }
  }
}

TEST_CASE("shifting the hyperbolic distance kernel yields a positive definite gram") {
  Rng rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<Vec> pts;
  while (pts.size() < 20) {
    Vec y{unif(rng), unif(rng), unif(rng)};
    if (norm(y) < 0.85) pts.push_back(y);
  }
  const Vec origin(3, 0.0);
  const Kernel k = Kernel::neg_poincare();
  CHECK(shift_decomposition_check(k, pts, origin) <= 1e-12);

  const GramMatrix g0 = shifted_pd_gram(k, pts, origin);
  const auto report = classify_gram(g0, 400, 11, kDefinitenessTolDefault, {});
  CHECK(report.verdict == DefinitenessVerdict::PdConsistent);

  // the shifted kernel vanishes at the anchor
  const GramMatrix with_anchor =
      shifted_pd_gram(k, std::vector<Vec>{origin, pts[0]}, origin);
  CHECK(with_anchor[0][0] == 0.0);
}

TEST_CASE("poisson link probabilities track the bernoulli approximation") {
  const auto rows =
      poisson_bernoulli_check({std::log(0.5), std::log(0.2), std::log(0.1),
                               std::log(0.05), std::log(0.01)});
  REQUIRE(rows.size() == 5);
  CHECK(poisson_bernoulli_pass(rows));

  const auto& r = rows[2];  // lambda = 0.1
  CHECK_THAT(r.lambda, Catch::Matchers::WithinAbs(0.1, 1e-12));
  CHECK_THAT(r.p_one, Catch::Matchers::WithinAbs(0.0904837, 1e-6));
  CHECK_THAT(r.sigma_h, Catch::Matchers::WithinAbs(0.0909091, 1e-6));
  CHECK_THAT(r.diff, Catch::Matchers::WithinAbs(4.25e-4, 1e-5));
  CHECK(r.diff <= 2.0 * r.lambda_cubed);
  CHECK_THAT(r.p_ge2, Catch::Matchers::WithinAbs(0.00467884, 1e-7));

  // vanishing rate: both sides collapse together
  const auto tiny = poisson_bernoulli_check({std::log(1e-6)});
  CHECK(tiny[0].diff <= 1e-11);

  CHECK_THROWS_AS(poisson_bernoulli_check({0.0}), std::invalid_argument);
}
