#pragma once

// Starting partitions for EM.

#include <vector>

#include <Eigen/Dense>

#include "gmmdr/rng.hpp"

namespace gmmdr {

/// Ward agglomerative clustering computed once and cut at any level.
class WardTree {
 public:
  explicit WardTree(const Eigen::MatrixXd& data);

  /// 0-based labels for the partition with `groups` clusters.
  std::vector<int> cut(int groups) const;

  int size() const { return n_; }

 private:
  struct Merge {
    int a;
    int b;
    double height;
  };
  int n_ = 0;
  std::vector<Merge> merges_;  // sorted by height
};

/// k-means++ seeding followed by Lloyd iterations; 0-based labels.
std::vector<int> kmeans_partition(const Eigen::MatrixXd& data, int groups, Rng& rng,
                                  int max_iter = 100);

/// Hard 0/1 responsibilities from 0-based labels.
Eigen::MatrixXd labels_to_responsibilities(const std::vector<int>& labels, int groups);

/// Rows drawn uniformly from the probability simplex.
Eigen::MatrixXd random_responsibilities(int n, int groups, Rng& rng);

}  // namespace gmmdr
