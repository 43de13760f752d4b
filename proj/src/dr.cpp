#include "gmmdr/dr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gmmdr/error.hpp"

namespace gmmdr {

namespace {

Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& Sigma, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw SingularMatrix(std::string(what) + ": covariance matrix is not positive definite");
  return llt;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

void check_square(const Eigen::MatrixXd& a, Eigen::Index p, const char* what) {
  if (a.rows() != p || a.cols() != p)
    throw InvalidArgument(std::string(what) + ": matrix dimensions do not conform");
}

}  // namespace

Eigen::MatrixXd between_cov(const Eigen::VectorXd& weights, const Eigen::MatrixXd& means,
                            const Eigen::VectorXd& grand_mean) {
  if (weights.size() != means.rows() || grand_mean.size() != means.cols())
    throw InvalidArgument("between_cov: dimension mismatch");
  const Eigen::MatrixXd centered = means.rowwise() - grand_mean.transpose();
  return symmetrize(centered.transpose() * weights.asDiagonal() * centered);
}

Eigen::MatrixXd kernel_sir2(const Eigen::VectorXd& weights,
                            const std::vector<Eigen::MatrixXd>& covariances,
                            const Eigen::MatrixXd& Sigma) {
  const Eigen::Index p = Sigma.rows();
  check_square(Sigma, p, "kernel_sir2");
  if (static_cast<Eigen::Index>(covariances.size()) != weights.size())
    throw InvalidArgument("kernel_sir2: weights and covariances differ in length");
  const auto llt = factor_spd(Sigma, "kernel_sir2");

  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t g = 0; g < covariances.size(); ++g) {
    check_square(covariances[g], p, "kernel_sir2");
    pooled += weights(static_cast<Eigen::Index>(g)) * covariances[g];
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t g = 0; g < covariances.size(); ++g) {
    const Eigen::MatrixXd dev = covariances[g] - pooled;
    out += weights(static_cast<Eigen::Index>(g)) * dev * llt.solve(dev.transpose());
  }
  return symmetrize(out);
}

Eigen::MatrixXd kernel_combined(const Eigen::MatrixXd& M_I, const Eigen::MatrixXd& M_II,
                                const Eigen::MatrixXd& Sigma) {
  const Eigen::Index p = Sigma.rows();
  check_square(Sigma, p, "kernel_combined");
  check_square(M_I, p, "kernel_combined");
  check_square(M_II, p, "kernel_combined");
  const auto llt = factor_spd(Sigma, "kernel_combined");
  return symmetrize(M_I * llt.solve(M_I) + M_II);
}

KernelSet build_kernels(const MixtureParams& params, const Eigen::MatrixXd& Sigma) {
  KernelSet k;
  const Eigen::VectorXd grand = params.means.transpose() * params.weights;
  k.Sigma = Sigma;
  k.Sigma_bar = Eigen::MatrixXd::Zero(params.p(), params.p());
  for (int g = 0; g < params.G(); ++g) k.Sigma_bar += params.weights(g) * params.covariances[g];
  k.M_I = between_cov(params.weights, params.means, grand);
  k.M_II = kernel_sir2(params.weights, params.covariances, Sigma);
  k.M = kernel_combined(k.M_I, k.M_II, Sigma);
  return k;
}

KernelSet build_kernels(const MixtureFit& fit, const Eigen::MatrixXd& data) {
  if (data.cols() != fit.p()) throw InvalidArgument("build_kernels: dimension mismatch");
  return build_kernels(fit.params, mle_covariance(data));
}

DrBasis generalized_eigen(const Eigen::MatrixXd& M, const Eigen::MatrixXd& Sigma,
                          const DrOptions& opts, std::optional<int> max_directions) {
  const Eigen::Index p = Sigma.rows();
  check_square(Sigma, p, "generalized_eigen");
  check_square(M, p, "generalized_eigen");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sig(symmetrize(Sigma), Eigen::EigenvaluesOnly);
  const double smin = sig.eigenvalues().minCoeff(), smax = sig.eigenvalues().maxCoeff();
  if (!(smin > 0.0) || smax / smin > opts.max_condition) {
    std::ostringstream msg;
    msg << "generalized_eigen: covariance is singular or nearly so (condition number "
        << (smin > 0.0 ? smax / smin : INFINITY)
        << "); remove collinear or constant variables";
    throw SingularMatrix(msg.str());
  }
  const auto llt = factor_spd(Sigma, "generalized_eigen");
  const Eigen::MatrixXd L = llt.matrixL();

  // C = L^-1 M L^-T
  Eigen::MatrixXd C = L.triangularView<Eigen::Lower>().solve(M);
  C = L.triangularView<Eigen::Lower>().solve(C.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(C));
  if (es.info() != Eigen::Success) throw NumericError("generalized_eigen: eigensolver failed");

  const Eigen::VectorXd values = es.eigenvalues().reverse();
  const Eigen::MatrixXd W = es.eigenvectors().rowwise().reverse();
  Eigen::MatrixXd V = L.transpose().triangularView<Eigen::Upper>().solve(W);

  int d = 0;
  if (values(0) > 0.0)
    while (d < p && values(d) > opts.rel_threshold * values(0)) ++d;
  if (max_directions) d = std::min(d, std::max(0, *max_directions));

  DrBasis basis;
  basis.d = d;
  basis.eigenvalues = values.head(d);
  basis.raw_vectors = V.leftCols(d);
  for (int j = 0; j < d; ++j) {
    Eigen::Index at = 0;
    basis.raw_vectors.col(j).cwiseAbs().maxCoeff(&at);
    if (basis.raw_vectors(at, j) < 0.0) basis.raw_vectors.col(j) *= -1.0;
  }
  basis.directions = basis.raw_vectors.colwise().normalized();
  return basis;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> eigenvalue_split(const Eigen::MatrixXd& V,
                                                             const MixtureParams& params,
                                                             const Eigen::MatrixXd& Sigma) {
  const KernelSet k = build_kernels(params, Sigma);
  const auto llt = factor_spd(Sigma, "eigenvalue_split");
  const Eigen::MatrixXd MIV = k.M_I * V;
  const Eigen::VectorXd mean_part = (MIV.transpose() * llt.solve(MIV)).diagonal();
  const Eigen::VectorXd var_part = (V.transpose() * k.M_II * V).diagonal();
  return {mean_part, var_part};
}

DrBasis estimate_directions(const MixtureParams& params, ModelName model,
                            const Eigen::MatrixXd& Sigma, const DrOptions& opts) {
  const KernelSet k = build_kernels(params, Sigma);
  std::optional<int> cap;
  if (equal_covariance(model)) cap = std::min(params.p(), params.G() - 1);
  DrBasis basis = generalized_eigen(k.M, Sigma, opts, cap);
  auto [mean_part, var_part] = eigenvalue_split(basis.raw_vectors, params, Sigma);
  basis.mean_contrib = std::move(mean_part);
  basis.var_contrib = std::move(var_part);
  return basis;
}

DrBasis estimate_directions(const MixtureFit& fit, const Eigen::MatrixXd& data,
                            const DrOptions& opts) {
  if (data.cols() != fit.p()) throw InvalidArgument("estimate_directions: dimension mismatch");
  return estimate_directions(fit.params, fit.model, mle_covariance(data), opts);
}

Eigen::MatrixXd project_data(const Eigen::MatrixXd& data, const DrBasis& basis, int k) {
  if (k < 0 || k > basis.d) throw InvalidArgument("project_data: k exceeds basis dimension");
  if (data.cols() != basis.directions.rows())
    throw InvalidArgument("project_data: dimension mismatch");
  return data * basis.directions.leftCols(k);
}

MixtureParams project_params(const MixtureParams& params, const Eigen::MatrixXd& beta) {
  if (beta.rows() != params.p()) throw InvalidArgument("project_params: dimension mismatch");
  MixtureParams out;
  out.weights = params.weights;
  out.means = params.means * beta;
  out.covariances.reserve(params.covariances.size());
  for (const auto& s : params.covariances) out.covariances.push_back(symmetrize(beta.transpose() * s * beta));
  return out;
}

MixtureParams project_params(const MixtureFit& fit, const DrBasis& basis, int k) {
  if (k < 0 || k > basis.d) throw InvalidArgument("project_params: k exceeds basis dimension");
  return project_params(fit.params, basis.directions.leftCols(k));
}

DensityGrid density_grid(const MixtureParams& projected, const GridSpec& grid) {
  if (projected.p() != 2) throw InvalidArgument("density_grid: needs a two-dimensional mixture");
  if (grid.nx < 1 || grid.ny < 1 || !(grid.x_max > grid.x_min) || !(grid.y_max > grid.y_min))
    throw InvalidArgument("density_grid: empty grid");
  DensityGrid out;
  const double dx = (grid.x_max - grid.x_min) / grid.nx;
  const double dy = (grid.y_max - grid.y_min) / grid.ny;
  out.x = Eigen::VectorXd::LinSpaced(grid.nx, grid.x_min + dx / 2, grid.x_max - dx / 2);
  out.y = Eigen::VectorXd::LinSpaced(grid.ny, grid.y_min + dy / 2, grid.y_max - dy / 2);
  if (grid.nx == 1) out.x(0) = grid.x_min + dx / 2;
  if (grid.ny == 1) out.y(0) = grid.y_min + dy / 2;

  Eigen::MatrixXd points(static_cast<Eigen::Index>(grid.nx) * grid.ny, 2);
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) points.row(iy * grid.nx + ix) << out.x(ix), out.y(iy);

  Eigen::MatrixXd resp;
  const Eigen::VectorXd logd = log_densities(points, projected, &resp);
  const Classification map = map_classify(resp);
  out.density.resize(grid.ny, grid.nx);
  out.label.resize(grid.ny, grid.nx);
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    out.density(r / grid.nx, r % grid.nx) = std::exp(logd(r));
    out.label(r / grid.nx, r % grid.nx) = map.labels[static_cast<std::size_t>(r)];
  }
  return out;
}

}  // namespace gmmdr
