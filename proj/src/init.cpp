#include "gmmdr/init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gmmdr/error.hpp"

namespace gmmdr {

WardTree::WardTree(const Eigen::MatrixXd& data) : n_(static_cast<int>(data.rows())) {
  const int n = n_;
  if (n < 1) throw InvalidArgument("WardTree: empty data");
  // Lance-Williams on half squared Euclidean distances; NN-chain is valid
  // because Ward linkage is reducible.
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = (data.row(i) - data.row(j)).squaredNorm();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  std::vector<double> size(n, 1.0);
  std::vector<char> active(n, 1);
  std::vector<int> chain;
  chain.reserve(n);
  merges_.reserve(n > 0 ? n - 1 : 0);
  int remaining = n;
  int next_start = 0;

  while (remaining > 1) {
    if (chain.empty()) {
      while (!active[next_start]) ++next_start;
      chain.push_back(next_start);
    }
    for (;;) {
      const int a = chain.back();
      const int prev = chain.size() >= 2 ? chain[chain.size() - 2] : -1;
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      if (prev >= 0) {
        best = prev;
        best_d = dist(a, prev);
      }
      for (int j = 0; j < n; ++j) {
        if (!active[j] || j == a) continue;
        if (dist(a, j) < best_d) {
          best_d = dist(a, j);
          best = j;
        }
      }
      if (best == prev) {
        chain.pop_back();
        chain.pop_back();
        const int keep = std::min(a, prev);
        const int drop = std::max(a, prev);
        const double nk = size[keep], nd = size[drop];
        for (int j = 0; j < n; ++j) {
          if (!active[j] || j == keep || j == drop) continue;
          const double nj = size[j];
          const double d = ((nj + nk) * dist(j, keep) + (nj + nd) * dist(j, drop) -
                            nj * best_d) /
                           (nj + nk + nd);
          dist(j, keep) = d;
          dist(keep, j) = d;
        }
        size[keep] = nk + nd;
        active[drop] = 0;
        --remaining;
        merges_.push_back({keep, drop, best_d});
        break;
      }
      chain.push_back(best);
    }
  }
  std::stable_sort(merges_.begin(), merges_.end(),
                   [](const Merge& x, const Merge& y) { return x.height < y.height; });
}

std::vector<int> WardTree::cut(int groups) const {
  if (groups < 1 || groups > n_) throw InvalidArgument("WardTree::cut: bad group count");
  std::vector<int> parent(n_);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (int m = 0; m < n_ - groups; ++m) {
    const int ra = find(merges_[m].a), rb = find(merges_[m].b);
    parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  // Number groups by first appearance.
  std::vector<int> labels(n_), code(n_, -1);
  int next = 0;
  for (int i = 0; i < n_; ++i) {
    const int r = find(i);
    if (code[r] < 0) code[r] = next++;
    labels[i] = code[r];
  }
  return labels;
}

std::vector<int> kmeans_partition(const Eigen::MatrixXd& data, int groups, Rng& rng,
                                  int max_iter) {
  const int n = static_cast<int>(data.rows());
  if (groups < 1 || groups > n) throw InvalidArgument("kmeans_partition: bad group count");
  Eigen::MatrixXd centers(groups, data.cols());

  // k-means++ seeding.
  Eigen::VectorXd closest(n);
  centers.row(0) = data.row(static_cast<Eigen::Index>(rng.below(n)));
  for (int i = 0; i < n; ++i) closest(i) = (data.row(i) - centers.row(0)).squaredNorm();
  for (int k = 1; k < groups; ++k) {
    const double total = closest.sum();
    int pick = n - 1;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (int i = 0; i < n; ++i) {
        target -= closest(i);
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.below(n));
    }
    centers.row(k) = data.row(pick);
    for (int i = 0; i < n; ++i)
      closest(i) = std::min(closest(i), (data.row(i) - centers.row(k)).squaredNorm());
  }

  std::vector<int> labels(n, -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int k = 0; k < groups; ++k) {
        const double d = (data.row(i) - centers.row(k)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    Eigen::VectorXd count = Eigen::VectorXd::Zero(groups);
    centers.setZero();
    for (int i = 0; i < n; ++i) {
      centers.row(labels[i]) += data.row(i);
      count(labels[i]) += 1.0;
    }
    for (int k = 0; k < groups; ++k)
      if (count(k) > 0) centers.row(k) /= count(k);
    for (int k = 0; k < groups; ++k) {
      if (count(k) > 0) continue;
      // Empty cluster: move it to the point farthest from its own center.
      int far = 0;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        if (count(labels[i]) <= 1.0) continue;
        const double d = (data.row(i) - centers.row(labels[i])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      count(labels[far]) -= 1.0;
      labels[far] = k;
      count(k) = 1.0;
      centers.row(k) = data.row(far);
    }
  }
  return labels;
}

Eigen::MatrixXd labels_to_responsibilities(const std::vector<int>& labels, int groups) {
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), groups);
  for (std::size_t i = 0; i < labels.size(); ++i) z(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return z;
}

Eigen::MatrixXd random_responsibilities(int n, int groups, Rng& rng) {
  Eigen::MatrixXd z(n, groups);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 0; k < groups; ++k) {
      // Exponential spacings give a uniform draw on the simplex.
      z(i, k) = -std::log(1.0 - rng.uniform());
      s += z(i, k);
    }
    z.row(i) /= s;
  }
  return z;
}

}  // namespace gmmdr
