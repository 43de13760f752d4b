#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gmmdr/dr.hpp"
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

Eigen::MatrixXd random_spd(int p, std::mt19937_64& gen) {
  const Eigen::MatrixXd a = randn(p, p, gen);
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(p, p);
}

// Two components N([-1,0], I) and N([1,0], I) with equal weights.
MixtureParams toy() {
  MixtureParams p;
  p.weights = Eigen::Vector2d(0.5, 0.5);
  p.means = (Eigen::MatrixXd(2, 2) << -1, 0, 1, 0).finished();
  p.covariances = {Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)};
  return p;
}

double maxabs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("between-component covariance") {
  const Eigen::VectorXd w = Eigen::Vector3d(0.2, 0.3, 0.5);
  const Eigen::MatrixXd same = Eigen::MatrixXd::Ones(3, 2);
  CHECK(maxabs(between_cov(w, same, Eigen::Vector2d(1, 1))) == 0.0);

  const MixtureParams t = toy();
  const Eigen::MatrixXd b = between_cov(t.weights, t.means, Eigen::Vector2d::Zero());
  CHECK(maxabs(b - (Eigen::MatrixXd(2, 2) << 1, 0, 0, 0).finished()) < 1e-15);

  std::mt19937_64 gen(1);
  const Eigen::MatrixXd mu = randn(3, 4, gen);
  const Eigen::VectorXd grand = mu.transpose() * w;
  Eigen::MatrixXd brute = Eigen::MatrixXd::Zero(4, 4);
  for (int g = 0; g < 3; ++g)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) brute(i, j) += w(g) * (mu(g, i) - grand(i)) * (mu(g, j) - grand(j));
  CHECK(maxabs(between_cov(w, mu, grand) - brute) < 1e-14);
}

TEST_CASE("covariance-difference kernel") {
  const Eigen::Vector2d w(0.5, 0.5);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  CHECK(maxabs(kernel_sir2(w, {I * 3.0, I * 3.0}, I)) == 0.0);
  CHECK(maxabs(kernel_sir2(w, {2.0 * I, I}, I) - 0.25 * I) < 1e-15);

  const MixtureParams pop = scenario_parameters(ScenarioBase::synthetic_vvv);
  const Eigen::MatrixXd Sigma = oracle::mixture_covariance(pop);
  const Eigen::MatrixXd Sinv = Sigma.inverse();
  Eigen::MatrixXd bar = Eigen::MatrixXd::Zero(3, 3);
  for (int g = 0; g < 3; ++g) bar += pop.weights(g) * pop.covariances[g];
  Eigen::MatrixXd brute = Eigen::MatrixXd::Zero(3, 3);
  for (int g = 0; g < 3; ++g) {
    const Eigen::MatrixXd d = pop.covariances[g] - bar;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) brute(i, j) += pop.weights(g) * d(i, k) * Sinv(k, l) * d(j, l);
  }
  CHECK(maxabs(kernel_sir2(pop.weights, pop.covariances, Sigma) - brute) < 1e-12);

  Eigen::MatrixXd bad = I;
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(kernel_sir2(w, {I, I}, bad), SingularMatrix);
}

TEST_CASE("combined kernel") {
  std::mt19937_64 gen(2);
  const Eigen::MatrixXd a = random_spd(3, gen), b = random_spd(3, gen);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  CHECK(maxabs(kernel_combined(a, Eigen::MatrixXd::Zero(3, 3), I) - a * a) < 1e-12);
  CHECK(maxabs(kernel_combined(Eigen::MatrixXd::Zero(3, 3), b, I) - b) == 0.0);

  // The toy mixture: all clustering information lies along the first axis.
  const MixtureParams t = toy();
  const Eigen::MatrixXd Sigma = oracle::mixture_covariance(t);
  const DrBasis basis = estimate_directions(t, ModelName::EII, Sigma);
  REQUIRE(basis.d == 1);
  CHECK(std::abs(basis.directions(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(basis.directions(1, 0)) < 1e-15);
}

TEST_CASE("generalized eigenproblem") {
  std::mt19937_64 gen(3);
  const Eigen::MatrixXd S = random_spd(4, gen);
  const DrBasis same = generalized_eigen(S, S);
  CHECK(same.d == 4);
  CHECK((same.eigenvalues.array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(maxabs(same.raw_vectors.transpose() * S * same.raw_vectors - Eigen::MatrixXd::Identity(4, 4)) <
        1e-12);

  const DrBasis diag =
      generalized_eigen(Eigen::Vector2d(4, 1).asDiagonal(), Eigen::MatrixXd::Identity(2, 2));
  CHECK(diag.eigenvalues(0) == doctest::Approx(4.0));
  CHECK(diag.eigenvalues(1) == doctest::Approx(1.0));
  CHECK(maxabs(diag.directions - Eigen::MatrixXd::Identity(2, 2)) < 1e-14);

  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd M = random_spd(5, gen), Sigma = random_spd(5, gen);
    const DrBasis r = generalized_eigen(M, Sigma);
    REQUIRE(r.d == 5);
    for (int j = 0; j < 5; ++j) {
      const Eigen::VectorXd v = r.raw_vectors.col(j);
      CHECK((M * v - r.eigenvalues(j) * Sigma * v).norm() < 1e-10);
      CHECK(r.directions.col(j).norm() == doctest::Approx(1.0));
      Eigen::Index big;
      v.cwiseAbs().maxCoeff(&big);
      CHECK(v(big) > 0.0);
    }
    for (int j = 1; j < 5; ++j) CHECK(r.eigenvalues(j - 1) >= r.eigenvalues(j));
    // Symmetric reduction through the inverse square root of Sigma.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sigma);
    const Eigen::MatrixXd isq =
        es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
        es.eigenvectors().transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> red(isq * M * isq);
    const Eigen::VectorXd want = red.eigenvalues().reverse();
    CHECK((want - r.eigenvalues).cwiseAbs().maxCoeff() < 1e-10 * want(0));
    const Eigen::MatrixXd vecs =
        (isq * red.eigenvectors().rowwise().reverse()).colwise().normalized();
    CHECK(oracle::max_dev_up_to_sign(vecs, r.directions) < 1e-8);
  }

  const DrBasis capped = generalized_eigen(random_spd(4, gen), random_spd(4, gen), {}, 2);
  CHECK(capped.d == 2);
}

TEST_CASE("eigenvalue split") {
  const LabeledDataset ds = gen_synthetic_vvv(50, Augmentation::noise, 1);
  const Eigen::MatrixXd x = ds.data;

  const MixtureFit eee = em_fit(x, 3, ModelName::EEE, FitConfig{});
  const DrBasis b1 = estimate_directions(eee, x);
  CHECK(b1.d == 2);  // min(p, G - 1)
  CHECK(b1.var_contrib.cwiseAbs().maxCoeff() < 1e-10);

  MixtureParams equal_means = eee.params;
  const MixtureFit vvv = em_fit(x, 3, ModelName::VVV, FitConfig{});
  equal_means = vvv.params;
  for (int g = 0; g < 3; ++g) equal_means.means.row(g) = vvv.params.means.row(0);
  const DrBasis b2 = estimate_directions(equal_means, ModelName::VVV, mle_covariance(x));
  CHECK(b2.mean_contrib.cwiseAbs().maxCoeff() < 1e-10);

  const DrBasis b3 = estimate_directions(vvv, x);
  for (int i = 0; i < b3.d; ++i)
    CHECK(std::abs(b3.eigenvalues(i) - b3.mean_contrib(i) - b3.var_contrib(i)) < 1e-10);

  // On the selected model, the leading direction separates mostly by
  // variance and the next mostly by location.
  const PipelineResult r = gmmdr_pipeline(x, SelectionConfig{});
  REQUIRE(r.basis.d >= 2);
  CHECK(r.basis.var_contrib(0) > r.basis.mean_contrib(0));
  CHECK(r.basis.mean_contrib(1) > 10.0 * r.basis.var_contrib(1));
  CHECK(maxabs(b3.raw_vectors.transpose() * mle_covariance(x) * b3.raw_vectors -
               Eigen::MatrixXd::Identity(b3.d, b3.d)) < 1e-10);
}

TEST_CASE("affine invariance of the directions") {
  std::mt19937_64 gen(4);
  const LabeledDataset ds = gen_synthetic_vvv(50, Augmentation::none, 3);
  const MixtureFit fit = em_fit(ds.data, 3, ModelName::VVV, FitConfig{});
  const DrBasis ref = estimate_directions(fit.params, ModelName::VVV, mle_covariance(ds.data));
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd C = oracle::well_conditioned(3, gen);
    const Eigen::RowVectorXd a = randn(1, 3, gen);
    MixtureParams moved = fit.params;
    for (int g = 0; g < 3; ++g) {
      moved.means.row(g) = fit.params.means.row(g) * C + a;
      moved.covariances[g] = C.transpose() * fit.params.covariances[g] * C;
    }
    const Eigen::MatrixXd y = (ds.data * C).rowwise() + a;
    const DrBasis got = estimate_directions(moved, ModelName::VVV, mle_covariance(y));
    const Eigen::MatrixXd want = (C.inverse() * ref.raw_vectors).colwise().normalized();
    CHECK(oracle::max_dev_up_to_sign(got.directions, want) < 1e-8);
    CHECK((got.eigenvalues - ref.eigenvalues).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("projection") {
  std::mt19937_64 gen(5);
  const Eigen::MatrixXd x = randn(20, 3, gen);
  DrBasis id;
  id.raw_vectors = id.directions = Eigen::MatrixXd::Identity(3, 3);
  id.eigenvalues = Eigen::Vector3d(3, 2, 1);
  id.d = 3;
  CHECK(project_data(x, id, 3) == x);
  CHECK(project_data(x, id, 2).cols() == 2);

  const LabeledDataset ds = gen_synthetic_vvv(50, Augmentation::noise, 2);
  const MixtureFit fit = em_fit(ds.data, 3, ModelName::VVV, FitConfig{});
  const DrBasis b = estimate_directions(fit, ds.data);
  const Eigen::MatrixXd cz = mle_covariance(project_data(ds.data, b, b.d));
  Eigen::MatrixXd off = cz;
  off.diagonal().setZero();
  CHECK(maxabs(off) < 1e-10);

  // Chang: one direction carries the clusters.
  const LabeledDataset ch = gen_chang(300, 2);
  const MixtureFit cf = em_fit(ch.data, 2, ModelName::EEE, FitConfig{});
  const DrBasis cb = estimate_directions(cf, ch.data);
  const ModelName uni[] = {ModelName::E, ModelName::V};
  const MixtureFit refit = model_search(project_data(ch.data, cb, 1), {2, 2}, uni, FitConfig{}).best();
  CHECK(adjusted_rand_index(ch.labels, map_classify(refit.responsibilities).labels) >= 0.9);
}

TEST_CASE("projected parameters") {
  const MixtureParams t = toy();
  const MixtureParams e1 = project_params(t, Eigen::Vector2d(1, 0));
  CHECK(e1.means(0, 0) == -1.0);
  CHECK(e1.means(1, 0) == 1.0);
  CHECK(e1.covariances[0](0, 0) == 1.0);
  CHECK(e1.covariances[1](0, 0) == 1.0);
  CHECK(e1.weights == t.weights);

  std::mt19937_64 gen(6);
  MixtureParams r;
  r.weights = Eigen::Vector3d(0.2, 0.3, 0.5);
  r.means = randn(3, 4, gen);
  for (int g = 0; g < 3; ++g) r.covariances.push_back(random_spd(4, gen));
  const Eigen::MatrixXd beta = randn(4, 2, gen);
  const MixtureParams pr = project_params(r, beta);
  for (int g = 0; g < 3; ++g) {
    Eigen::MatrixXd want = Eigen::MatrixXd::Zero(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 4; ++k)
          for (int l = 0; l < 4; ++l) want(i, j) += beta(k, i) * r.covariances[g](k, l) * beta(l, j);
    CHECK(maxabs(pr.covariances[g] - want) < 1e-14 * (1.0 + maxabs(want)));
    for (int i = 0; i < 2; ++i) {
      double m = 0.0;
      for (int k = 0; k < 4; ++k) m += r.means(g, k) * beta(k, i);
      CHECK(std::abs(pr.means(g, i) - m) < 1e-14 * (1.0 + std::abs(m)));
    }
  }
}

TEST_CASE("density grid") {
  MixtureParams one;
  one.weights = Eigen::VectorXd::Ones(1);
  one.means = Eigen::MatrixXd::Zero(1, 2);
  one.covariances = {Eigen::MatrixXd::Identity(2, 2)};
  GridSpec spec{-1, 1, -1, 1, 3, 3};
  const DensityGrid g = density_grid(one, spec);
  CHECK(g.x(1) == doctest::Approx(0.0));
  CHECK(g.density(1, 1) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-14));

  MixtureParams two = toy();
  const DensityGrid s = density_grid(two, GridSpec{-3, 3, -2, 2, 6, 4});
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 4; ++i) CHECK(s.label(i, j) == (s.x(j) < 0 ? 1 : 2));

  // Cells of a grid refined by three share the coarse centres exactly.
  const DensityGrid coarse = density_grid(two, GridSpec{-3, 3, -3, 3, 4, 4});
  const DensityGrid fine = density_grid(two, GridSpec{-3, 3, -3, 3, 12, 12});
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      CHECK(fine.x(3 * j + 1) == doctest::Approx(coarse.x(j)));
      CHECK(fine.density(3 * i + 1, 3 * j + 1) == doctest::Approx(coarse.density(i, j)).epsilon(1e-13));
    }
  CHECK_THROWS_AS(density_grid(scenario_parameters(ScenarioBase::model1_eee), spec), InvalidArgument);
}
