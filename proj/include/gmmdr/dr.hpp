#pragma once

// Dimension reduction directions for a fitted Gaussian mixture.
//
// The kernel M = M_I Sigma^-1 M_I + M_II combines the between-component
// covariance of the means (M_I) with the spread of the component covariances
// around their pooled average (M_II). Directions solve M v = l Sigma v with
// V^T Sigma V = I.

#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "gmmdr/mixture.hpp"

namespace gmmdr {

struct KernelSet {
  Eigen::MatrixXd M_I;        ///< between-component covariance Sigma_B
  Eigen::MatrixXd M_II;       ///< covariance-difference kernel
  Eigen::MatrixXd M;          ///< combined kernel
  Eigen::MatrixXd Sigma;      ///< marginal covariance
  Eigen::MatrixXd Sigma_bar;  ///< pooled within-component covariance
};

struct DrBasis {
  Eigen::MatrixXd raw_vectors;  ///< p x d, Sigma-orthonormal eigenvectors V
  Eigen::MatrixXd directions;   ///< p x d, unit-norm columns beta_j = v_j / |v_j|
  Eigen::VectorXd eigenvalues;  ///< nonincreasing
  Eigen::VectorXd mean_contrib;
  Eigen::VectorXd var_contrib;
  int d = 0;

  int p() const { return static_cast<int>(raw_vectors.rows()); }
};

struct DrOptions {
  /// Directions with l_i <= rel_threshold * l_1 are dropped.
  double rel_threshold = 1e-8;
  /// Condition number of Sigma beyond which estimation refuses to run.
  double max_condition = 1e12;
};

/// sum_g pi_g (mu_g - mu)(mu_g - mu)^T. `means` is G x p.
Eigen::MatrixXd between_cov(const Eigen::VectorXd& weights, const Eigen::MatrixXd& means,
                            const Eigen::VectorXd& grand_mean);

/// sum_g pi_g (Sigma_g - Sigma_bar) Sigma^-1 (Sigma_g - Sigma_bar)^T.
/// Throws SingularMatrix when Sigma is not SPD.
Eigen::MatrixXd kernel_sir2(const Eigen::VectorXd& weights,
                            const std::vector<Eigen::MatrixXd>& covariances,
                            const Eigen::MatrixXd& Sigma);

/// M_I Sigma^-1 M_I + M_II.
Eigen::MatrixXd kernel_combined(const Eigen::MatrixXd& M_I, const Eigen::MatrixXd& M_II,
                                const Eigen::MatrixXd& Sigma);

/// All kernels from mixture parameters and a marginal covariance.
KernelSet build_kernels(const MixtureParams& params, const Eigen::MatrixXd& Sigma);

/// Kernels for a fit on `data`, with Sigma the MLE covariance of the data.
KernelSet build_kernels(const MixtureFit& fit, const Eigen::MatrixXd& data);

/// Solves M v = l Sigma v through the Cholesky factor of Sigma.
///
/// Eigenpairs are sorted by decreasing l and each vector is signed so its
/// largest-magnitude coefficient is positive. `max_directions` caps d.
/// Contributions are left empty; see eigenvalue_split.
DrBasis generalized_eigen(const Eigen::MatrixXd& M, const Eigen::MatrixXd& Sigma,
                          const DrOptions& opts = {},
                          std::optional<int> max_directions = std::nullopt);

/// Splits each eigenvalue into the part due to the component means
/// (diag V^T M_I Sigma^-1 M_I V) and the part due to the covariances
/// (diag V^T M_II V).
std::pair<Eigen::VectorXd, Eigen::VectorXd> eigenvalue_split(const Eigen::MatrixXd& V,
                                                             const MixtureParams& params,
                                                             const Eigen::MatrixXd& Sigma);

/// Kernels, eigendecomposition and split in one call. For equal-covariance
/// families d is capped at min(p, G-1).
DrBasis estimate_directions(const MixtureFit& fit, const Eigen::MatrixXd& data,
                            const DrOptions& opts = {});

/// Same from parameters and an explicit Sigma.
DrBasis estimate_directions(const MixtureParams& params, ModelName model,
                            const Eigen::MatrixXd& Sigma, const DrOptions& opts = {});

/// Z = X beta[:, 0..k).
Eigen::MatrixXd project_data(const Eigen::MatrixXd& data, const DrBasis& basis, int k);

/// Parameters of the mixture seen through k directions: beta^T mu_g and
/// beta^T Sigma_g beta.
MixtureParams project_params(const MixtureParams& params, const Eigen::MatrixXd& beta);
MixtureParams project_params(const MixtureFit& fit, const DrBasis& basis, int k);

struct GridSpec {
  double x_min = -1, x_max = 1;
  double y_min = -1, y_max = 1;
  int nx = 50, ny = 50;
};

/// Mixture density and MAP component evaluated at cell centres.
struct DensityGrid {
  Eigen::VectorXd x;        ///< nx cell centres
  Eigen::VectorXd y;        ///< ny cell centres
  Eigen::MatrixXd density;  ///< ny x nx
  Eigen::MatrixXi label;    ///< ny x nx, 1-based
};

/// Requires a two-dimensional projected mixture.
DensityGrid density_grid(const MixtureParams& projected, const GridSpec& grid);

}  // namespace gmmdr
