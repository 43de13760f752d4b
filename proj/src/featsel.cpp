#include "gmmdr/featsel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "gmmdr/error.hpp"

namespace gmmdr {

namespace {

std::vector<ModelName> families(const SelectionConfig& cfg) {
  return cfg.models.empty() ? all_models(2) : cfg.models;
}

Eigen::MatrixXd with_column(const Eigen::MatrixXd& base, const Eigen::VectorXd& extra) {
  Eigen::MatrixXd out(extra.size(), base.cols() + 1);
  if (base.cols() > 0) out.leftCols(base.cols()) = base;
  out.col(base.cols()) = extra;
  return out;
}

Eigen::MatrixXd columns(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
  return out;
}

double max_abs_correlation(const Eigen::MatrixXd& Z) {
  if (Z.cols() < 2) return 0.0;
  const Eigen::MatrixXd s = mle_covariance(Z);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = i + 1; j < s.cols(); ++j)
      worst = std::max(worst, std::abs(s(i, j)) / std::sqrt(s(i, i) * s(j, j)));
  return worst;
}

}  // namespace

void SelectionConfig::validate() const {
  if (max_G < 1) throw InvalidArgument("max_G must be >= 1");
  if (max_passes < 1) throw InvalidArgument("max_passes must be >= 1");
  if (fixed_model && fixed_model->second < 1) throw InvalidArgument("fixed G must be >= 1");
  fit.validate();
}

std::string_view to_string(StopReason reason) {
  return reason == StopReason::negative_diff ? "negative-diff" : "all-included";
}

double bic_reg(std::span<const double> feature, int q) {
  const double n = static_cast<double>(feature.size());
  if (feature.size() < 2) throw InvalidArgument("bic_reg: need at least two observations");
  if (q < 1) throw InvalidArgument("bic_reg: q must be >= 1");
  double mean = 0.0;
  for (double v : feature) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : feature) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var > 0.0)) throw InvalidArgument("bic_reg: zero-variance feature");
  return -n * std::log(2.0 * std::numbers::pi) - n * std::log(var) - n -
         (q + 1) * std::log(n);
}

MixtureFit best_clustering(const Eigen::MatrixXd& data, const SelectionConfig& cfg) {
  if (cfg.fixed_model) {
    const auto [model, G] = *cfg.fixed_model;
    const ModelName m[] = {model};
    return model_search(data, {G, G}, m, cfg.fit).best();
  }
  const auto fam = families(cfg);
  return model_search(data, {1, cfg.max_G}, fam, cfg.fit).best();
}

BicDiff bic_diff(const Eigen::MatrixXd& selected, double bic_clust_selected,
                 const Eigen::VectorXd& candidate, const SelectionConfig& cfg) {
  if (selected.cols() > 0 && selected.rows() != candidate.size())
    throw InvalidArgument("bic_diff: row count mismatch");
  BicDiff out;
  out.fit = best_clustering(with_column(selected, candidate), cfg);
  out.bic_clust = out.fit.bic;
  out.bic_clust_prev = bic_clust_selected;
  const int q = static_cast<int>(selected.cols()) + 1;
  out.bic_not_clust =
      bic_clust_selected + bic_reg({candidate.data(), static_cast<std::size_t>(candidate.size())}, q);
  out.bic_diff = out.bic_clust - out.bic_not_clust;
  // A one-cluster winner on the first step reproduces bic_reg by another
  // route; do not let rounding turn that into a positive difference.
  if (std::abs(out.bic_diff) <= 1e-10 * std::max(1.0, std::abs(out.bic_clust))) out.bic_diff = 0.0;
  return out;
}

BicDiff bic_diff(const Eigen::MatrixXd& selected, const Eigen::VectorXd& candidate,
                 const SelectionConfig& cfg) {
  const double prev = selected.cols() == 0 ? 0.0 : best_clustering(selected, cfg).bic;
  return bic_diff(selected, prev, candidate, cfg);
}

SelectionResult greedy_select(const Eigen::MatrixXd& Z, const SelectionConfig& cfg,
                              std::span<const double> eigenvalues) {
  cfg.validate();
  const int d = static_cast<int>(Z.cols());
  if (d < 1) throw InvalidArgument("greedy_select: no candidate variables");
  if (!eigenvalues.empty() && static_cast<int>(eigenvalues.size()) != d)
    throw InvalidArgument("greedy_select: eigenvalue count differs from column count");

  SelectionResult result;
  auto& trace = result.trace;
  if (const double corr = max_abs_correlation(Z); corr > 1e-6) {
    std::ostringstream msg;
    msg << "candidate variables are not orthogonal (max |correlation| = " << corr << ")";
    trace.warnings.push_back(msg.str());
  }

  // A single-component winner carries no clustering information, yet its
  // BIC difference is (q - 1) log n by construction; it never wins a step.
  auto eligible = [](const CandidateEval& e) { return e.G >= 2; };
  auto better = [&](const CandidateEval& a, const CandidateEval& b) {
    if (eligible(a) != eligible(b)) return eligible(a);
    if (a.bic_diff != b.bic_diff) return a.bic_diff > b.bic_diff;
    if (!eigenvalues.empty() && eigenvalues[a.candidate] != eigenvalues[b.candidate])
      return eigenvalues[a.candidate] > eigenvalues[b.candidate];
    return a.candidate < b.candidate;
  };

  std::vector<int> remaining(d);
  for (int j = 0; j < d; ++j) remaining[j] = j;
  Eigen::MatrixXd current(Z.rows(), 0);
  double current_bic = 0.0;

  while (!remaining.empty()) {
    SelectionStep step;
    std::optional<MixtureFit> best_fit;
    for (int j : remaining) {
      BicDiff bd = bic_diff(current, current_bic, Z.col(j), cfg);
      CandidateEval e{j, bd.bic_clust, bd.bic_not_clust, bd.bic_diff, bd.fit.model, bd.fit.G};
      if (step.evaluations.empty() || better(e, step.evaluations[0])) {
        best_fit = std::move(bd.fit);
        step.evaluations.insert(step.evaluations.begin(), e);
      } else {
        step.evaluations.push_back(e);
      }
    }
    const CandidateEval& win = step.evaluations.front();
    step.candidate = win.candidate;
    step.bic_clust = win.bic_clust;
    step.bic_not_clust = win.bic_not_clust;
    step.bic_diff = win.bic_diff;
    step.model = win.model;
    step.G = win.G;
    // The first variable is always taken; the stopping rule applies from the
    // second step on.
    step.accepted = trace.steps.empty() || (win.bic_diff > 0.0 && eligible(win));
    std::sort(step.evaluations.begin(), step.evaluations.end(),
              [](const CandidateEval& a, const CandidateEval& b) { return a.candidate < b.candidate; });
    trace.steps.push_back(step);
    if (!step.accepted) {
      trace.stop_reason = StopReason::negative_diff;
      return result;
    }
    trace.selected.push_back(step.candidate);
    current = with_column(current, Z.col(step.candidate));
    current_bic = step.bic_clust;
    result.fit = std::move(best_fit);
    remaining.erase(std::find(remaining.begin(), remaining.end(), step.candidate));
  }
  trace.stop_reason = StopReason::all_included;
  return result;
}

SelectionResult entropy_select(const Eigen::MatrixXd& Z, int groups, const SelectionConfig& cfg) {
  cfg.validate();
  const int d = static_cast<int>(Z.cols());
  if (d < 1) throw InvalidArgument("entropy_select: no candidate variables");
  const auto [model, G] = cfg.fixed_model.value_or(std::pair{ModelName::EII, groups});
  SelectionResult result;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= d; ++k) {
    const Eigen::MatrixXd sub = Z.leftCols(k);
    MixtureFit fit;
    try {
      fit = em_fit(sub, G, k == 1 ? univariate_counterpart(model) : model, cfg.fit);
    } catch (const NumericError& e) {
      result.trace.warnings.push_back("entropy refit on " + std::to_string(k) +
                                      " directions failed: " + e.what());
      continue;
    }
    const double h = entropy(fit.responsibilities);
    SelectionStep step;
    step.candidate = k - 1;
    step.bic_clust = fit.bic;
    step.bic_diff = -h;  // larger is better, mirroring the BIC trace
    step.model = fit.model;
    step.G = fit.G;
    result.trace.steps.push_back(step);
    if (h < best) {
      best = h;
      result.fit = std::move(fit);
      result.trace.selected.assign(static_cast<std::size_t>(k), 0);
      for (int j = 0; j < k; ++j) result.trace.selected[static_cast<std::size_t>(j)] = j;
    }
  }
  for (auto& s : result.trace.steps)
    s.accepted = s.candidate < static_cast<int>(result.trace.selected.size());
  result.trace.stop_reason = static_cast<int>(result.trace.selected.size()) == d
                                 ? StopReason::all_included
                                 : StopReason::negative_diff;
  return result;
}

PipelineResult gmmdr_pipeline(const Eigen::MatrixXd& data, const SelectionConfig& cfg,
                              const MixtureFit* initial) {
  cfg.validate();
  const int p = static_cast<int>(data.cols());
  PipelineResult out;
  if (initial) {
    if (initial->p() != p) throw InvalidArgument("gmmdr_pipeline: initial fit dimension mismatch");
    out.initial_fit = *initial;
  } else {
    const auto fam = cfg.models.empty() ? all_models(p) : cfg.models;
    out.initial_fit = model_search(data, {1, cfg.max_G}, fam, cfg.fit).best();
  }

  MixtureFit fit = out.initial_fit;
  Eigen::MatrixXd transform = Eigen::MatrixXd::Identity(p, p);
  Eigen::MatrixXd features = data;
  out.converged = false;

  for (int pass = 0; pass < cfg.max_passes; ++pass) {
    DrBasis basis = estimate_directions(fit, features, cfg.directions);
    if (basis.d == 0) {
      out.warnings.push_back("the mixture has no discriminating directions (single component)");
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd Z = features * basis.directions;
    std::vector<double> evals(basis.eigenvalues.data(), basis.eigenvalues.data() + basis.d);
    SelectionResult sel = cfg.mode == SelectionMode::bic ? greedy_select(Z, cfg, evals)
                                                          : entropy_select(Z, fit.G, cfg);
    for (const auto& w : sel.trace.warnings) out.warnings.push_back(w);
    out.passes.push_back({basis.d, basis, sel.trace});
    if (!sel.fit) {
      out.warnings.push_back("no direction improves on a single cluster; keeping previous variables");
      out.converged = true;
      break;
    }
    const auto& selected = sel.trace.selected;
    transform = transform * columns(basis.directions, selected);
    features = columns(Z, selected);
    fit = std::move(*sel.fit);
    if (static_cast<int>(selected.size()) == basis.d) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged)
    out.warnings.push_back("pass cap reached; returning the last selection");

  // Final directions from the final mixture, expressed in both coordinate
  // systems.
  DrBasis local = estimate_directions(fit, features, cfg.directions);
  out.basis = local;
  out.basis.raw_vectors = transform * local.raw_vectors;
  out.basis.directions = out.basis.raw_vectors.colwise().normalized();
  out.feature_directions = local.raw_vectors;
  for (int j = 0; j < local.d; ++j)
    out.feature_directions.col(j) /= out.basis.raw_vectors.col(j).norm();

  out.fit = std::move(fit);
  out.transform = std::move(transform);
  return out;
}

}  // namespace gmmdr
