#include "gmmdr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "gmmdr/error.hpp"

namespace gmmdr {

Partition Partition::from(std::span<const int> raw) {
  std::map<int, int> code;
  for (int v : raw) code.emplace(v, 0);
  int next = 1;
  for (auto& [value, c] : code) c = next++;
  Partition out;
  out.k = static_cast<int>(code.size());
  out.labels.reserve(raw.size());
  for (int v : raw) out.labels.push_back(code[v]);
  return out;
}

Eigen::MatrixXi confusion_matrix(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size())
    throw InvalidArgument("confusion_matrix: partitions differ in length");
  const Partition t = Partition::from(truth), p = Partition::from(predicted);
  Eigen::MatrixXi table = Eigen::MatrixXi::Zero(t.k, p.k);
  for (std::size_t i = 0; i < truth.size(); ++i) ++table(t.labels[i] - 1, p.labels[i] - 1);
  return table;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw InvalidArgument("adjusted_rand_index: length mismatch");
  if (a.size() < 2) throw InvalidArgument("adjusted_rand_index: need at least two items");
  const Eigen::MatrixXi table = confusion_matrix(a, b);
  auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (Eigen::Index i = 0; i < table.rows(); ++i)
    for (Eigen::Index j = 0; j < table.cols(); ++j) sum_cells += pairs(table(i, j));
  for (Eigen::Index i = 0; i < table.rows(); ++i) sum_rows += pairs(table.row(i).sum());
  for (Eigen::Index j = 0; j < table.cols(); ++j) sum_cols += pairs(table.col(j).sum());
  const double total = pairs(static_cast<double>(a.size()));
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (sum_cells - expected) / (max_index - expected);
}

namespace {

// Optimal one-to-one matching of predicted to true classes on the padded
// square contingency table: perm[i] is the predicted column matched to
// true row i.
std::vector<int> best_matching(const Eigen::MatrixXi& table, long* matched_out) {
  const int k = static_cast<int>(std::max(table.rows(), table.cols()));
  if (k > 10) throw InvalidArgument("error_rate: exhaustive matching supports at most 10 classes");
  Eigen::MatrixXi square = Eigen::MatrixXi::Zero(k, k);
  square.topLeftCorner(table.rows(), table.cols()) = table;

  std::vector<int> perm(k), best_perm;
  std::iota(perm.begin(), perm.end(), 0);
  long best = -1;
  do {
    long matched = 0;
    for (int i = 0; i < k; ++i) matched += square(i, perm[i]);
    if (matched > best) {
      best = matched;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (matched_out) *matched_out = best;
  return best_perm;
}

}  // namespace

double error_rate(std::span<const int> truth, std::span<const int> predicted) {
  long matched = 0;
  best_matching(confusion_matrix(truth, predicted), &matched);
  return 1.0 - static_cast<double>(matched) / static_cast<double>(truth.size());
}

std::vector<bool> misclassified(std::span<const int> truth, std::span<const int> predicted) {
  const std::vector<int> perm = best_matching(confusion_matrix(truth, predicted), nullptr);
  const Partition t = Partition::from(truth), p = Partition::from(predicted);
  std::vector<bool> out(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i)
    out[i] = perm[static_cast<std::size_t>(t.labels[i] - 1)] != p.labels[i] - 1;
  return out;
}

PcaResult correlation_pca(const Eigen::MatrixXd& data) {
  const double n = static_cast<double>(data.rows());
  const Eigen::RowVectorXd mean = data.colwise().mean();
  Eigen::MatrixXd centered = data.rowwise() - mean;
  const Eigen::RowVectorXd sd = (centered.colwise().squaredNorm() / n).cwiseSqrt();
  for (Eigen::Index j = 0; j < sd.size(); ++j)
    if (!(sd(j) > 0.0)) throw InvalidArgument("correlation_pca: zero-variance column");
  PcaResult out;
  out.standardized = centered.array().rowwise() / sd.array();
  const Eigen::MatrixXd corr = out.standardized.transpose() * out.standardized / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (corr + corr.transpose()));
  out.eigenvalues = es.eigenvalues().reverse();
  out.loadings = es.eigenvectors().rowwise().reverse();
  out.scores = out.standardized * out.loadings;
  return out;
}

PcaGmmResult pca_gmm(const Eigen::MatrixXd& data, GRange range,
                     std::span<const ModelName> models, const FitConfig& cfg) {
  PcaResult pca = correlation_pca(data);
  int keep = 0;
  while (keep < pca.eigenvalues.size() && pca.eigenvalues(keep) > 1.0) ++keep;
  keep = std::max(keep, 1);

  PcaGmmResult out;
  out.retained = keep;
  out.scores = pca.scores.leftCols(keep);
  const std::vector<ModelName> family =
      models.empty() ? all_models(keep) : std::vector<ModelName>(models.begin(), models.end());
  out.fit = model_search(out.scores, range, family, cfg).best();
  out.eigenvalues = std::move(pca.eigenvalues);
  out.loadings = std::move(pca.loadings);
  return out;
}

}  // namespace gmmdr
