#include "gmmdr/mixture.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <thread>

#include "gmmdr/error.hpp"
#include "gmmdr/init.hpp"
#include "gmmdr/rng.hpp"

namespace gmmdr {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

constexpr int kInnerIter = 20;
constexpr double kInnerTol = 1e-8;

struct ModelInfo {
  ModelName model;
  std::string_view code;
};

constexpr ModelInfo kModels[] = {
    {ModelName::E, "E"},     {ModelName::V, "V"},     {ModelName::EII, "EII"},
    {ModelName::VII, "VII"}, {ModelName::EEI, "EEI"}, {ModelName::VEI, "VEI"},
    {ModelName::EEE, "EEE"}, {ModelName::EEV, "EEV"}, {ModelName::VEV, "VEV"},
    {ModelName::VVV, "VVV"},
};

// Weighted sufficient statistics for one set of responsibilities.
struct Moments {
  Eigen::VectorXd ng;
  Eigen::MatrixXd means;
  std::vector<Eigen::MatrixXd> scatter;  // W_g = sum_i z_ig (x_i - mu_g)(x_i - mu_g)^T
};

Moments weighted_moments(const Eigen::MatrixXd& data, const Eigen::MatrixXd& resp) {
  const int G = static_cast<int>(resp.cols());
  Moments m;
  m.ng = resp.colwise().sum().transpose();
  m.means.resize(G, data.cols());
  for (int g = 0; g < G; ++g)
    for (Eigen::Index j = 0; j < data.cols(); ++j) m.means(g, j) = resp.col(g).dot(data.col(j));
  m.scatter.resize(G);
  const Eigen::Index p = data.cols();
  Eigen::MatrixXd centered(data.rows(), p);
  for (int g = 0; g < G; ++g) {
    m.means.row(g) /= m.ng(g);
    centered = data.rowwise() - m.means.row(g);
    // Column dot products; the blocked product has a large fixed cost for
    // the narrow matrices seen here.
    Eigen::MatrixXd& w = m.scatter[g];
    w.resize(p, p);
    for (Eigen::Index a = 0; a < p; ++a) {
      const Eigen::ArrayXd wa = centered.col(a).array() * resp.col(g).array();
      for (Eigen::Index b = 0; b <= a; ++b)
        w(a, b) = w(b, a) = (wa * centered.col(b).array()).sum();
    }
  }
  return m;
}

// Eigenvectors with eigenvalues in decreasing order.
struct SortedEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

SortedEigen sorted_eigen(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  SortedEigen out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

// Inverse of a lower-triangular matrix by forward substitution.
Eigen::MatrixXd lower_inverse(const Eigen::MatrixXd& L) {
  const Eigen::Index p = L.rows();
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    U(j, j) = 1.0 / L(j, j);
    for (Eigen::Index i = j + 1; i < p; ++i) {
      double s = 0.0;
      for (Eigen::Index k = j; k < i; ++k) s += L(i, k) * U(k, j);
      U(i, j) = -s / L(i, i);
    }
  }
  return U;
}

double geometric_mean(const Eigen::VectorXd& v) {
  return std::exp(v.array().log().mean());
}

bool relative_change_small(double now, double before) {
  return std::abs(now - before) <= kInnerTol * std::max(std::abs(now), 1e-300);
}

std::vector<Eigen::MatrixXd> covariances_for(const Moments& m, int n, ModelName model,
                                              const MixtureParams* warm) {
  const int G = static_cast<int>(m.ng.size());
  const int p = static_cast<int>(m.means.cols());
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(p, p);
  std::vector<Eigen::MatrixXd> cov(G);

  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(p, p);
  for (const auto& w : m.scatter) pooled += w;

  switch (model) {
    case ModelName::E:
    case ModelName::EEE: {
      const Eigen::MatrixXd s = pooled / n;
      std::fill(cov.begin(), cov.end(), s);
      break;
    }
    case ModelName::V:
    case ModelName::VVV:
      for (int g = 0; g < G; ++g) cov[g] = m.scatter[g] / m.ng(g);
      break;
    case ModelName::EII: {
      const double lambda = pooled.trace() / (static_cast<double>(n) * p);
      std::fill(cov.begin(), cov.end(), lambda * identity);
      break;
    }
    case ModelName::VII:
      for (int g = 0; g < G; ++g)
        cov[g] = (m.scatter[g].trace() / (m.ng(g) * p)) * identity;
      break;
    case ModelName::EEI: {
      const Eigen::MatrixXd s = Eigen::MatrixXd(pooled.diagonal().asDiagonal()) / n;
      std::fill(cov.begin(), cov.end(), s);
      break;
    }
    case ModelName::VEI: {
      // Sigma_g = lambda_g B, det(B) = 1; alternate lambda | B and B | lambda.
      Eigen::VectorXd shape = Eigen::VectorXd::Ones(p);
      if (warm && warm->G() == G && warm->p() == p) {
        const Eigen::VectorXd d0 = warm->covariances[0].diagonal();
        shape = d0 / geometric_mean(d0);
      }
      Eigen::VectorXd lambda(G);
      double prev_obj = std::numeric_limits<double>::quiet_NaN();
      for (int it = 0; it < kInnerIter; ++it) {
        for (int g = 0; g < G; ++g)
          lambda(g) = (m.scatter[g].diagonal().array() / shape.array()).sum() / (p * m.ng(g));
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(p);
        for (int g = 0; g < G; ++g) acc += m.scatter[g].diagonal() / lambda(g);
        shape = acc / geometric_mean(acc);
        double obj = 0.0;
        for (int g = 0; g < G; ++g)
          obj += p * m.ng(g) * std::log(lambda(g)) +
                 (m.scatter[g].diagonal().array() / shape.array()).sum() / lambda(g);
        if (it > 0 && relative_change_small(obj, prev_obj)) break;
        prev_obj = obj;
      }
      for (int g = 0; g < G; ++g) cov[g] = Eigen::MatrixXd((lambda(g) * shape).asDiagonal());
      break;
    }
    case ModelName::EEV: {
      // Closed form: D_g from the eigenvectors of W_g, common lambda A from
      // the summed ordered eigenvalues.
      std::vector<SortedEigen> eig(G);
      Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
      for (int g = 0; g < G; ++g) {
        eig[g] = sorted_eigen(m.scatter[g]);
        c += eig[g].values;
      }
      c /= n;
      for (int g = 0; g < G; ++g)
        cov[g] = eig[g].vectors * c.asDiagonal() * eig[g].vectors.transpose();
      break;
    }
    case ModelName::VEV: {
      // Sigma_g = lambda_g D_g A D_g^T with D_g from W_g (eigenvalues paired
      // in decreasing order with A); alternate lambda | A and A | lambda.
      std::vector<SortedEigen> eig(G);
      for (int g = 0; g < G; ++g) eig[g] = sorted_eigen(m.scatter[g]);
      Eigen::VectorXd shape = Eigen::VectorXd::Ones(p);
      if (warm && warm->G() == G && warm->p() == p) {
        Eigen::VectorXd a0 = sorted_eigen(warm->covariances[0]).values;
        if ((a0.array() > 0.0).all()) shape = a0 / geometric_mean(a0);
      }
      Eigen::VectorXd lambda(G);
      double prev_obj = std::numeric_limits<double>::quiet_NaN();
      for (int it = 0; it < kInnerIter; ++it) {
        for (int g = 0; g < G; ++g)
          lambda(g) = (eig[g].values.array() / shape.array()).sum() / (p * m.ng(g));
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(p);
        for (int g = 0; g < G; ++g) acc += eig[g].values / lambda(g);
        shape = acc / geometric_mean(acc);
        double obj = 0.0;
        for (int g = 0; g < G; ++g)
          obj += p * m.ng(g) * std::log(lambda(g)) +
                 (eig[g].values.array() / shape.array()).sum() / lambda(g);
        if (it > 0 && relative_change_small(obj, prev_obj)) break;
        prev_obj = obj;
      }
      for (int g = 0; g < G; ++g)
        cov[g] = lambda(g) * eig[g].vectors * shape.asDiagonal() * eig[g].vectors.transpose();
      break;
    }
  }
  for (auto& s : cov) s = 0.5 * (s + s.transpose());
  return cov;
}

void check_model_dimension(ModelName model, int p) {
  if (is_univariate(model) != (p == 1))
    throw InvalidArgument(std::string("model ") + std::string(to_string(model)) +
                          " is not available for p = " + std::to_string(p));
}

void check_data(const Eigen::MatrixXd& data) {
  if (data.rows() < 1 || data.cols() < 1) throw InvalidArgument("empty data matrix");
  if (!data.allFinite()) throw InvalidArgument("data contains non-finite entries");
}

double average_variance(const Eigen::MatrixXd& data) {
  return mle_covariance(data).diagonal().mean();
}

// Throws DegenerateFit when a component collapsed.
void check_degenerate(const MixtureParams& params, int n, double floor_abs) {
  for (int g = 0; g < params.G(); ++g) {
    if (!(params.weights(g) >= 1.0 / (2.0 * n)))
      throw DegenerateFit("component weight collapsed below 1/(2n)");
    if (!params.covariances[g].allFinite() || !params.means.row(g).allFinite())
      throw DegenerateFit("non-finite component parameters");
    // Smallest eigenvalue above the floor <=> Sigma - floor I is positive
    // definite, which a Cholesky attempt decides far more cheaply.
    Eigen::MatrixXd shifted = params.covariances[g];
    shifted.diagonal().array() -= floor_abs;
    if (Eigen::LLT<Eigen::MatrixXd>(shifted).info() != Eigen::Success)
      throw DegenerateFit("covariance eigenvalue below the variance floor");
  }
}

struct RunResult {
  MixtureParams params;
  Eigen::MatrixXd resp;
  double loglik;
  bool converged;
  int iterations;
  std::vector<double> trace;
};

RunResult run_em(const Eigen::MatrixXd& data, ModelName model, Eigen::MatrixXd resp,
                 const FitConfig& cfg, double floor_abs) {
  const int n = static_cast<int>(data.rows());
  RunResult r;
  r.params = m_step(data, resp, model);
  check_degenerate(r.params, n, floor_abs);
  r.loglik = log_likelihood(data, r.params, &resp);
  r.trace.push_back(r.loglik);
  r.iterations = 1;
  r.converged = false;
  if (r.params.G() == 1) {
    r.iterations = 0;
    r.converged = true;
  } else {
    while (r.iterations < cfg.max_iter) {
      MixtureParams next = m_step(data, resp, model, &r.params);
      check_degenerate(next, n, floor_abs);
      const double ll = log_likelihood(data, next, &resp);
      r.params = std::move(next);
      ++r.iterations;
      r.trace.push_back(ll);
      const double before = r.loglik;
      r.loglik = ll;
      if (std::abs(ll - before) <= cfg.rel_tol * std::abs(ll)) {
        r.converged = true;
        break;
      }
    }
  }
  r.resp = std::move(resp);
  return r;
}

MixtureFit finish(RunResult&& r, ModelName model, int n) {
  MixtureFit fit;
  fit.model = model;
  fit.G = r.params.G();
  fit.n = n;
  fit.params = std::move(r.params);
  fit.loglik = r.loglik;
  fit.nparams = count_params(model, fit.params.p(), fit.G);
  fit.bic = bic(fit.loglik, fit.nparams, n);
  fit.responsibilities = std::move(r.resp);
  fit.converged = r.converged;
  fit.iterations = r.iterations;
  fit.loglik_trace = std::move(r.trace);
  return fit;
}

// Starting responsibilities for one G; shared by every model at that G so
// fits are comparable and independent of scheduling.
std::vector<Eigen::MatrixXd> make_starts(const Eigen::MatrixXd& data, int G,
                                         const FitConfig& cfg,
                                         const WardTree* tree) {
  const int n = static_cast<int>(data.rows());
  std::vector<Eigen::MatrixXd> starts;
  if (G == 1) {
    starts.push_back(Eigen::MatrixXd::Ones(n, 1));
    return starts;
  }
  for (int r = 0; r < cfg.restarts; ++r) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(G), static_cast<std::uint64_t>(r)));
    const InitMethod method = r == 0 ? cfg.init : InitMethod::random;
    switch (method) {
      case InitMethod::hierarchical: {
        std::unique_ptr<WardTree> own;
        if (!tree) {
          own = std::make_unique<WardTree>(data);
          tree = own.get();
        }
        starts.push_back(labels_to_responsibilities(tree->cut(G), G));
        break;
      }
      case InitMethod::kmeans:
        starts.push_back(labels_to_responsibilities(kmeans_partition(data, G, rng), G));
        break;
      case InitMethod::random:
        starts.push_back(random_responsibilities(n, G, rng));
        break;
    }
  }
  return starts;
}

}  // namespace

std::string_view to_string(ModelName model) {
  for (const auto& m : kModels)
    if (m.model == model) return m.code;
  return "?";
}

ModelName parse_model(std::string_view code) {
  for (const auto& m : kModels)
    if (m.code == code) return m.model;
  throw InvalidArgument("unknown model code: " + std::string(code));
}

bool equal_covariance(ModelName model) {
  return model == ModelName::E || model == ModelName::EII || model == ModelName::EEI ||
         model == ModelName::EEE;
}

bool is_univariate(ModelName model) { return model == ModelName::E || model == ModelName::V; }

std::vector<ModelName> all_models(int p) {
  if (p == 1) return {ModelName::E, ModelName::V};
  return {ModelName::EII, ModelName::VII, ModelName::EEI, ModelName::VEI,
          ModelName::EEE, ModelName::EEV, ModelName::VEV, ModelName::VVV};
}

ModelName univariate_counterpart(ModelName model) {
  if (is_univariate(model)) return model;
  return equal_covariance(model) ? ModelName::E : ModelName::V;
}

std::string_view to_string(InitMethod init) {
  switch (init) {
    case InitMethod::hierarchical: return "hierarchical";
    case InitMethod::kmeans: return "kmeans";
    case InitMethod::random: return "random";
  }
  return "?";
}

InitMethod parse_init(std::string_view name) {
  if (name == "hierarchical") return InitMethod::hierarchical;
  if (name == "kmeans") return InitMethod::kmeans;
  if (name == "random") return InitMethod::random;
  throw InvalidArgument("unknown initialization: " + std::string(name));
}

void FitConfig::validate() const {
  if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  if (!(rel_tol > 0.0)) throw InvalidArgument("rel_tol must be > 0");
  if (restarts < 1) throw InvalidArgument("restarts must be >= 1");
  if (!(variance_floor >= 0.0)) throw InvalidArgument("variance floor must be >= 0");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

Eigen::VectorXd column_means(const Eigen::MatrixXd& data) {
  return data.colwise().mean().transpose();
}

Eigen::MatrixXd mle_covariance(const Eigen::MatrixXd& data) {
  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  Eigen::MatrixXd s = centered.transpose() * centered / static_cast<double>(data.rows());
  return 0.5 * (s + s.transpose());
}

int count_params(ModelName model, int p, int G) {
  if (p < 1 || G < 1) throw InvalidArgument("count_params: p and G must be >= 1");
  check_model_dimension(model, p);
  const int base = (G - 1) + G * p;
  const int full = p * (p + 1) / 2;
  const int orient = p * (p - 1) / 2;
  switch (model) {
    case ModelName::E: return base + 1;
    case ModelName::V: return base + G;
    case ModelName::EII: return base + 1;
    case ModelName::VII: return base + G;
    case ModelName::EEI: return base + p;
    case ModelName::VEI: return base + G + (p - 1);
    case ModelName::EEE: return base + full;
    case ModelName::EEV: return base + 1 + (p - 1) + G * orient;
    case ModelName::VEV: return base + G + (p - 1) + G * orient;
    case ModelName::VVV: return base + G * full;
  }
  throw InvalidArgument("count_params: unsupported model");
}

double bic(double loglik, int nparams, int n) {
  return 2.0 * loglik - nparams * std::log(static_cast<double>(n));
}

MixtureParams m_step(const Eigen::MatrixXd& data, const Eigen::MatrixXd& resp, ModelName model,
                     const MixtureParams* warm) {
  const int n = static_cast<int>(data.rows());
  check_model_dimension(model, static_cast<int>(data.cols()));
  Moments m = weighted_moments(data, resp);
  MixtureParams out;
  out.weights = m.ng / static_cast<double>(n);
  out.covariances = covariances_for(m, n, model, warm);
  out.means = std::move(m.means);
  return out;
}

Eigen::VectorXd log_densities(const Eigen::MatrixXd& data, const MixtureParams& params,
                              Eigen::MatrixXd* resp) {
  const int n = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  const int G = params.G();
  if (params.p() != p) throw InvalidArgument("dimension mismatch between data and mixture");
  Eigen::MatrixXd logd(n, G);
  Eigen::ArrayXd row(n), maha(n);
  for (int g = 0; g < G; ++g) {
    Eigen::LLT<Eigen::MatrixXd> llt(params.covariances[g]);
    if (llt.info() != Eigen::Success) throw SingularMatrix("component covariance is not SPD");
    const Eigen::MatrixXd L = llt.matrixL();
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    // Mahalanobis term as sum_a (L^-1 (x - mu))_a^2, accumulated column by
    // column so every update is a contiguous axpy.
    const Eigen::MatrixXd U = lower_inverse(L);
    const Eigen::VectorXd shift = U * params.means.row(g).transpose();
    maha.setZero();
    for (int a = 0; a < p; ++a) {
      row = U(a, 0) * data.col(0).array() - shift(a);
      for (int b = 1; b <= a; ++b) row += U(a, b) * data.col(b).array();
      maha += row.square();
    }
    logd.col(g) = -0.5 * (maha + p * kLog2Pi + logdet) + std::log(params.weights(g));
  }
  const Eigen::VectorXd rowmax = logd.rowwise().maxCoeff();
  Eigen::MatrixXd shifted(n, G);
  for (int g = 0; g < G; ++g)
    shifted.col(g) = (logd.col(g).array() - rowmax.array()).exp().matrix();
  const Eigen::VectorXd rowsum = shifted.rowwise().sum();
  if (resp) *resp = shifted.array().colwise() / rowsum.array();
  return rowmax.array() + rowsum.array().log();
}

double log_likelihood(const Eigen::MatrixXd& data, const MixtureParams& params,
                      Eigen::MatrixXd* resp) {
  return log_densities(data, params, resp).sum();
}

MixtureFit em_fit_from(const Eigen::MatrixXd& data, ModelName model,
                       std::span<const Eigen::MatrixXd> starts, const FitConfig& cfg) {
  cfg.validate();
  check_data(data);
  check_model_dimension(model, static_cast<int>(data.cols()));
  if (starts.empty()) throw InvalidArgument("em_fit_from: no starting values");
  const int n = static_cast<int>(data.rows());
  const double floor_abs = cfg.variance_floor * average_variance(data);

  std::optional<RunResult> best;
  std::string last_error;
  for (const auto& start : starts) {
    if (start.rows() != n) throw InvalidArgument("em_fit_from: start has wrong row count");
    try {
      RunResult r = run_em(data, model, start, cfg, floor_abs);
      if (!std::isfinite(r.loglik)) throw DegenerateFit("non-finite log-likelihood");
      if (!best || r.loglik > best->loglik) best = std::move(r);
    } catch (const NumericError& e) {
      last_error = e.what();
    }
  }
  if (!best) throw DegenerateFit(last_error.empty() ? "all initializations failed" : last_error);
  return finish(std::move(*best), model, n);
}

MixtureFit em_fit(const Eigen::MatrixXd& data, int G, ModelName model, const FitConfig& cfg) {
  cfg.validate();
  check_data(data);
  if (G < 1) throw InvalidArgument("G must be >= 1");
  if (data.rows() <= G) throw InvalidArgument("need more observations than components");
  const auto starts = make_starts(data, G, cfg, nullptr);
  return em_fit_from(data, model, starts, cfg);
}

SearchResult model_search(const Eigen::MatrixXd& data, GRange range,
                          std::span<const ModelName> models, const FitConfig& cfg) {
  cfg.validate();
  check_data(data);
  if (models.empty()) throw InvalidArgument("model_search: empty model set");
  if (range.lo < 1 || range.hi < range.lo) throw InvalidArgument("model_search: empty G range");
  const int n = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());

  std::vector<ModelName> family;
  for (ModelName m : models) {
    const ModelName use = p == 1 ? univariate_counterpart(m) : m;
    if (p > 1 && is_univariate(use))
      throw InvalidArgument("univariate model requested for multivariate data");
    if (std::find(family.begin(), family.end(), use) == family.end()) family.push_back(use);
  }

  std::unique_ptr<WardTree> tree;
  if (cfg.init == InitMethod::hierarchical && range.hi > 1) tree = std::make_unique<WardTree>(data);

  std::vector<std::vector<Eigen::MatrixXd>> starts;
  std::vector<SearchEntry> entries;
  for (int G = range.lo; G <= range.hi; ++G) {
    starts.push_back(n > G ? make_starts(data, G, cfg, tree.get())
                           : std::vector<Eigen::MatrixXd>{});
    for (ModelName m : family) entries.push_back({m, G, std::nullopt, {}});
  }

  auto run_task = [&](std::size_t t) {
    SearchEntry& e = entries[t];
    const auto& st = starts[static_cast<std::size_t>(e.G - range.lo)];
    if (st.empty()) {
      e.failure = "not enough observations for G components";
      return;
    }
    try {
      e.fit = em_fit_from(data, e.model, st, cfg);
    } catch (const Error& err) {
      e.failure = err.what();
    }
  };

  if (cfg.threads <= 1 || entries.size() < 2) {
    for (std::size_t t = 0; t < entries.size(); ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    const int workers = std::min<int>(cfg.threads, static_cast<int>(entries.size()));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t t; (t = next.fetch_add(1)) < entries.size();) run_task(t);
      });
  }

  SearchResult result;
  for (auto& e : entries) (e.fit ? result.ranked : result.failed).push_back(std::move(e));
  if (result.ranked.empty())
    throw NumericError("model_search: every fit failed (" + result.failed.front().failure + ")");
  std::stable_sort(result.ranked.begin(), result.ranked.end(),
                   [](const SearchEntry& a, const SearchEntry& b) {
                     if (a.fit->bic != b.fit->bic) return a.fit->bic > b.fit->bic;
                     if (a.G != b.G) return a.G < b.G;
                     return a.fit->nparams < b.fit->nparams;
                   });
  return result;
}

Classification map_classify(const Eigen::MatrixXd& responsibilities) {
  const int n = static_cast<int>(responsibilities.rows());
  Classification c;
  c.labels.resize(n);
  c.uncertainty.resize(n);
  for (int i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    // maxCoeff returns the first maximal index, i.e. ties go to the lowest.
    const double top = responsibilities.row(i).maxCoeff(&best);
    c.labels[i] = static_cast<int>(best) + 1;
    c.uncertainty(i) = 1.0 - top;
  }
  return c;
}

Classification map_classify(const MixtureFit& fit, const Eigen::MatrixXd& data) {
  if (data.cols() != fit.p()) throw InvalidArgument("map_classify: dimension mismatch");
  Eigen::MatrixXd resp;
  log_likelihood(data, fit.params, &resp);
  return map_classify(resp);
}

double entropy(const Eigen::MatrixXd& responsibilities) {
  const Eigen::VectorXd sums = responsibilities.rowwise().sum();
  for (Eigen::Index i = 0; i < sums.size(); ++i)
    if (!(std::abs(sums(i) - 1.0) <= 1e-8))
      throw InvalidArgument("entropy: responsibility rows must sum to 1");
  double h = 0.0;
  for (Eigen::Index i = 0; i < responsibilities.rows(); ++i)
    for (Eigen::Index g = 0; g < responsibilities.cols(); ++g) {
      const double t = responsibilities(i, g);
      if (t > 0.0) h -= t * std::log(t);
    }
  return h;
}

}  // namespace gmmdr
