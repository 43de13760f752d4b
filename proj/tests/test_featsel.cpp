#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gmmdr/error.hpp"
#include "gmmdr/eval.hpp"
#include "gmmdr/featsel.hpp"
#include "gmmdr/simgen.hpp"
#include "oracles.hpp"

using namespace gmmdr;

namespace {

Eigen::MatrixXd randn(int r, int c, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = nd(gen);
  return m;
}

Eigen::VectorXd bimodal(int n, double gap, std::mt19937_64& gen) {
  Eigen::VectorXd v = randn(n, 1, gen);
  for (int i = 0; i < n; i += 2) v(i) += gap;
  return v;
}

double reg(const Eigen::VectorXd& v, int q) {
  return bic_reg({v.data(), static_cast<std::size_t>(v.size())}, q);
}

}  // namespace

TEST_CASE("regression BIC closed form") {
  Eigen::VectorXd pm(100);
  for (int i = 0; i < 100; ++i) pm(i) = i % 2 ? 1.0 : -1.0;  // variance exactly 1
  const double want = -100.0 * std::log(2.0 * std::numbers::pi) - 100.0 - 2.0 * std::log(100.0);
  CHECK(reg(pm, 1) == doctest::Approx(want).epsilon(1e-14));
  CHECK(reg(pm, 1) == doctest::Approx(-292.998).epsilon(1e-6));
  CHECK(reg(pm, 1) == doctest::Approx(oracle::regression_bic(pm, Eigen::MatrixXd(100, 0))).epsilon(1e-13));

  const double c = 7.0;
  const Eigen::VectorXd scaled = pm * std::sqrt(c);
  CHECK(reg(scaled, 1) - reg(pm, 1) == doctest::Approx(-100.0 * std::log(c)).epsilon(1e-12));

  std::mt19937_64 gen(1);
  for (int t = 0; t < 20; ++t) {
    const int q = 1 + t % 5;
    const Eigen::MatrixXd Z = oracle::uncorrelated_columns(randn(80 + t, q, gen), 0.5 + t);
    const Eigen::VectorXd y = Z.col(q - 1);
    CHECK(std::abs(reg(y, q) - oracle::regression_bic(y, Z.leftCols(q - 1))) < 1e-9);
  }

  CHECK_THROWS_AS(reg(Eigen::VectorXd::Ones(5), 1), InvalidArgument);
  CHECK_THROWS_AS(reg(pm, 0), InvalidArgument);
  CHECK_THROWS_AS(reg(Eigen::VectorXd::Ones(1), 1), InvalidArgument);
}

TEST_CASE("BIC difference on the first step") {
  std::mt19937_64 gen(2);
  SelectionConfig cfg;
  const Eigen::VectorXd z = bimodal(400, 6.0, gen);
  const BicDiff d = bic_diff(Eigen::MatrixXd(400, 0), z, cfg);
  const Eigen::MatrixXd zm = z;
  const double single = em_fit(zm, 1, ModelName::E, cfg.fit).bic;
  CHECK(d.bic_clust_prev == 0.0);
  CHECK(d.bic_not_clust == doctest::Approx(single).epsilon(1e-12));
  CHECK(d.bic_diff == doctest::Approx(d.fit.bic - single).epsilon(1e-12));
  CHECK(d.bic_diff > 0.0);
  CHECK(d.fit.G == 2);
}

TEST_CASE("noise features rarely look clustered") {
  SelectionConfig cfg;
  int nonpositive = 0;
  const int seeds = 40;
  for (int s = 0; s < seeds; ++s) {
    std::mt19937_64 gen(100 + s);
    const Eigen::VectorXd z = randn(500, 1, gen);
    nonpositive += bic_diff(Eigen::MatrixXd(500, 0), z, cfg).bic_diff <= 0.0;
  }
  CHECK(nonpositive >= 0.95 * seeds);
}

TEST_CASE("greedy selection") {
  std::mt19937_64 gen(3);
  SelectionConfig cfg;

  SUBCASE("single clustered variable") {
    const Eigen::MatrixXd z = bimodal(200, 6.0, gen);
    const SelectionResult r = greedy_select(z, cfg);
    CHECK(r.trace.selected == std::vector<int>{0});
    CHECK(r.trace.stop_reason == StopReason::all_included);
    REQUIRE(r.fit);
    CHECK(r.fit->G == 2);
  }

  SUBCASE("clustered plus noise") {
    Eigen::MatrixXd z(300, 3);
    z.col(0) = randn(300, 1, gen);
    z.col(1) = bimodal(300, 8.0, gen);
    z.col(2) = randn(300, 1, gen);
    z = oracle::uncorrelated_columns(z, 1.0);
    const SelectionResult r = greedy_select(z, cfg);
    REQUIRE(!r.trace.selected.empty());
    CHECK(r.trace.selected[0] == 1);
    CHECK(r.trace.stop_reason == StopReason::negative_diff);
    CHECK(r.trace.warnings.empty());
    // Invariants: every step after the first is accepted only with a
    // positive difference from a clustered winner; the last step is the
    // rejected one; evaluations cover every remaining candidate.
    for (std::size_t k = 0; k < r.trace.steps.size(); ++k) {
      const auto& s = r.trace.steps[k];
      if (k > 0 && s.accepted) {
        CHECK(s.bic_diff > 0.0);
        CHECK(s.G >= 2);
      }
      CHECK(s.evaluations.size() == 3 - k);
      CHECK(s.accepted == (k + 1 < r.trace.steps.size()));
    }
    CHECK(r.trace.selected.size() == r.trace.steps.size() - 1);
  }

  SUBCASE("correlated candidates raise a warning") {
    Eigen::MatrixXd z(200, 2);
    z.col(0) = bimodal(200, 6.0, gen);
    z.col(1) = z.col(0) + 0.1 * randn(200, 1, gen);
    CHECK(!greedy_select(z, cfg).trace.warnings.empty());
  }

  CHECK_THROWS_AS(greedy_select(Eigen::MatrixXd(10, 0), cfg), InvalidArgument);
  const std::vector<double> wrong{1.0, 2.0};
  CHECK_THROWS_AS(greedy_select(randn(10, 1, gen), cfg, wrong), InvalidArgument);
  SelectionConfig bad;
  bad.max_G = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("three-cluster example keeps three directions") {
  const LabeledDataset ds = gen_synthetic_vvv(50, Augmentation::noise, 1);
  SelectionConfig cfg;
  const PipelineResult r = gmmdr_pipeline(ds.data, cfg);
  REQUIRE(!r.passes.empty());
  // Equal-covariance starting models give min(p, G - 1) directions.
  if (equal_covariance(r.initial_fit.model))
    CHECK(r.passes[0].d == std::min(10, r.initial_fit.G - 1));
  CHECK(r.passes[0].trace.selected.size() == 3);
  CHECK(r.fit.model == ModelName::VVV);
  CHECK(r.fit.G == 3);
  CHECK(r.basis.d == 3);
  CHECK(adjusted_rand_index(ds.labels, map_classify(r.fit.responsibilities).labels) == 1.0);
  CHECK(r.converged);
  CHECK(r.initial_fit.G > 3);

  // The returned basis lives in the original coordinates.
  CHECK(r.basis.p() == 10);
  const Eigen::MatrixXd z1 = ds.data * r.basis.directions;
  const Eigen::MatrixXd z2 = r.features(ds.data) * r.feature_directions;
  CHECK((z1 - z2).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + z1.cwiseAbs().maxCoeff()));
  for (int j = 0; j < r.basis.d; ++j) CHECK(r.basis.directions.col(j).norm() == doctest::Approx(1.0));

  // Fixed model and G: every step is fitted with them and the clustered
  // directions are the ones kept.
  SelectionConfig fixed;
  fixed.fixed_model = std::pair{ModelName::VVV, 3};
  const MixtureFit vvv = em_fit(ds.data, 3, ModelName::VVV, fixed.fit);
  const DrBasis b = estimate_directions(vvv, ds.data);
  const Eigen::MatrixXd Z = ds.data * b.directions;
  std::vector<double> ev(b.eigenvalues.data(), b.eigenvalues.data() + b.d);
  const SelectionResult sel = greedy_select(Z, fixed, ev);
  std::vector<int> kept = sel.trace.selected;
  std::sort(kept.begin(), kept.end());
  CHECK(kept == std::vector<int>{0, 1, 2});
  for (const auto& step : sel.trace.steps)
    for (const auto& e : step.evaluations) {
      CHECK(e.G == 3);
      CHECK((e.model == ModelName::VVV || e.model == ModelName::V));
    }
}

TEST_CASE("pipeline on one clustered variable converges in one pass") {
  std::mt19937_64 gen(4);
  const Eigen::MatrixXd x = bimodal(200, 6.0, gen);
  SelectionConfig cfg;
  const PipelineResult r = gmmdr_pipeline(x, cfg);
  CHECK(r.passes.size() == 1);
  CHECK(r.converged);
  CHECK(r.fit.G == 2);
  CHECK(r.basis.d == 1);
}

TEST_CASE("pipeline on a single blob reports no directions") {
  std::mt19937_64 gen(5);
  const Eigen::MatrixXd x = randn(200, 2, gen);
  SelectionConfig cfg;
  const PipelineResult r = gmmdr_pipeline(x, cfg);
  CHECK(r.fit.G == 1);
  CHECK(r.basis.d == 0);
  CHECK(!r.warnings.empty());
}

TEST_CASE("entropy selection picks the least overlapping prefix") {
  const LabeledDataset ds = gen_synthetic_vvv(50, Augmentation::noise, 2);
  SelectionConfig cfg;
  cfg.mode = SelectionMode::entropy;
  cfg.fixed_model = std::pair{ModelName::VVV, 3};
  const MixtureFit vvv = em_fit(ds.data, 3, ModelName::VVV, cfg.fit);
  const DrBasis b = estimate_directions(vvv, ds.data);
  const Eigen::MatrixXd Z = ds.data * b.directions;
  const SelectionResult r = entropy_select(Z, 3, cfg);
  REQUIRE(r.fit);
  const int k = static_cast<int>(r.trace.selected.size());
  for (int j = 0; j < k; ++j) CHECK(r.trace.selected[j] == j);
  const double h = entropy(r.fit->responsibilities);
  for (const auto& s : r.trace.steps) {
    CHECK(-s.bic_diff >= h - 1e-12);
    CHECK(s.accepted == (s.candidate < k));
  }
  CHECK(r.trace.steps.size() == static_cast<std::size_t>(b.d));

  const PipelineResult p = gmmdr_pipeline(ds.data, cfg);
  CHECK(p.fit.G == 3);
  CHECK(adjusted_rand_index(ds.labels, map_classify(p.fit.responsibilities).labels) > 0.9);
}
