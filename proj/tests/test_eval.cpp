#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "gmmdr/error.hpp"
#include "gmmdr/eval.hpp"
#include "gmmdr/mixture.hpp"
#include "gmmdr/simgen.hpp"
#include "oracles.hpp"

using namespace gmmdr;

namespace {

// Labels realizing a contingency table: row i, column j repeated t(i,j) times.
void from_table(const std::vector<std::vector<int>>& t, std::vector<int>& truth,
                std::vector<int>& pred) {
  truth.clear();
  pred.clear();
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t[i].size(); ++j)
      for (int c = 0; c < t[i][j]; ++c) {
        truth.push_back(static_cast<int>(i) + 1);
        pred.push_back(static_cast<int>(j) + 1);
      }
}

// Minimum disagreement over every injective relabelling of the predicted
// classes, working on the raw label vectors.
double brute_error(const std::vector<int>& truth, const std::vector<int>& pred) {
  std::vector<int> tl(truth), pl(pred);
  std::sort(tl.begin(), tl.end());
  tl.erase(std::unique(tl.begin(), tl.end()), tl.end());
  std::sort(pl.begin(), pl.end());
  pl.erase(std::unique(pl.begin(), pl.end()), pl.end());
  // Pad the truth side with impossible labels so every predicted class gets
  // a partner.
  while (tl.size() < pl.size()) tl.push_back(-1000 - static_cast<int>(tl.size()));
  std::vector<int> perm(tl.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = truth.size();
  do {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const auto j = std::lower_bound(pl.begin(), pl.end(), pred[i]) - pl.begin();
      wrong += tl[perm[j]] != truth[i];
    }
    best = std::min(best, wrong);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(truth.size());
}

}  // namespace

TEST_CASE("adjusted Rand index") {
  const std::vector<int> a{1, 1, 2, 2, 3, 3};
  CHECK(adjusted_rand_index(a, a) == 1.0);
  const std::vector<int> relabel{7, 7, 4, 4, 9, 9};
  CHECK(adjusted_rand_index(a, relabel) == 1.0);
  const std::vector<int> x{1, 1, 2, 2}, y{1, 2, 1, 2};
  CHECK(oracle::ari_pair_count(x, y) == doctest::Approx(-0.5));
  CHECK(adjusted_rand_index(x, y) == doctest::Approx(-0.5));

  std::mt19937_64 gen(1);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(gen() % 150);
    std::vector<int> p(n), q(n);
    for (int i = 0; i < n; ++i) {
      p[i] = static_cast<int>(gen() % 4);
      q[i] = static_cast<int>(gen() % 5) - 2;
    }
    CHECK(std::abs(adjusted_rand_index(p, q) - oracle::ari_pair_count(p, q)) < 1e-12);
  }

  std::vector<int> truth(1000);
  for (int i = 0; i < 1000; ++i) truth[i] = i % 3;
  double sum = 0.0;
  for (int t = 0; t < 200; ++t) {
    std::vector<int> shuffled = truth;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    sum += adjusted_rand_index(truth, shuffled);
  }
  CHECK(std::abs(sum / 200.0) < 0.02);

  CHECK_THROWS_AS(adjusted_rand_index(std::vector<int>{1, 2}, std::vector<int>{1}), InvalidArgument);
  CHECK_THROWS_AS(adjusted_rand_index(std::vector<int>{1}, std::vector<int>{1}), InvalidArgument);
}

TEST_CASE("confusion matrix") {
  const std::vector<int> a{3, 3, 5, 9, 9, 9};
  const Eigen::MatrixXi same = confusion_matrix(a, a);
  CHECK(same == Eigen::Vector3i(2, 1, 3).asDiagonal().toDenseMatrix());

  std::vector<int> truth, pred;
  from_table({{57, 2, 0}, {2, 64, 5}, {0, 0, 48}}, truth, pred);
  const Eigen::MatrixXi wine = confusion_matrix(truth, pred);
  CHECK(wine.rowwise().sum() == Eigen::Vector3i(59, 71, 48));
  CHECK(wine(1, 2) == 5);
  CHECK(error_rate(truth, pred) == doctest::Approx(9.0 / 178.0));

  from_table({{50, 0, 0, 0}, {12, 38, 0, 0}, {0, 0, 47, 3}, {0, 0, 0, 50}}, truth, pred);
  CHECK(confusion_matrix(truth, pred)(1, 0) == 12);
  CHECK(error_rate(truth, pred) == doctest::Approx(0.075));
}

TEST_CASE("error rate") {
  const std::vector<int> a{1, 1, 2, 2, 3};
  CHECK(error_rate(a, a) == 0.0);
  const std::vector<int> two{1, 1, 2, 2}, one{4, 4, 4, 4};
  CHECK(error_rate(two, one) == 0.5);

  std::mt19937_64 gen(2);
  for (int t = 0; t < 60; ++t) {
    const int n = 5 + static_cast<int>(gen() % 40);
    const int ka = 1 + static_cast<int>(gen() % 4), kb = 1 + static_cast<int>(gen() % 5);
    std::vector<int> truth(n), pred(n);
    for (int i = 0; i < n; ++i) {
      truth[i] = 10 * static_cast<int>(gen() % ka);
      pred[i] = static_cast<int>(gen() % kb) - 3;
    }
    const double e = error_rate(truth, pred);
    CHECK(e == doctest::Approx(brute_error(truth, pred)));
    const auto flags = misclassified(truth, pred);
    CHECK(static_cast<double>(std::count(flags.begin(), flags.end(), true)) ==
          doctest::Approx(e * n));
  }

  std::vector<int> many(30);
  std::iota(many.begin(), many.end(), 0);
  CHECK_THROWS_AS(error_rate(many, many), InvalidArgument);
}

TEST_CASE("principal components") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(200, 5);
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 5; ++j) x(i, j) = nd(gen) * (j + 1) + j;
  const PcaResult pca = correlation_pca(x);
  CHECK(pca.eigenvalues.sum() == doctest::Approx(5.0));
  for (int j = 1; j < 5; ++j) CHECK(pca.eigenvalues(j - 1) >= pca.eigenvalues(j));
  CHECK((pca.scores * pca.loadings.transpose() - pca.standardized).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((pca.standardized.colwise().mean()).cwiseAbs().maxCoeff() < 1e-12);

  const PcaGmmResult r = pca_gmm(x, {1, 3}, {}, FitConfig{});
  CHECK(r.retained >= 1);
  CHECK(r.retained <= 4);
  CHECK(r.scores.cols() == r.retained);
  int over = 0;
  for (int j = 0; j < 5; ++j) over += pca.eigenvalues(j) > 1.0;
  CHECK(r.retained == std::max(1, over));
}

TEST_CASE("leading components miss the Chang clusters") {
  // BIC on the first two correlation PCs should prefer a single component.
  int flat = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const LabeledDataset ds = gen_chang(300, seed);
    const PcaResult pca = correlation_pca(ds.data);
    const Eigen::MatrixXd two = pca.scores.leftCols(2);
    flat += model_search(two, {1, 9}, all_models(2), FitConfig{}).best().G == 1;
  }
  CHECK(flat >= 4);
}
