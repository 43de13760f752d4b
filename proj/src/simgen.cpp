#include "gmmdr/simgen.hpp"

#include <cmath>

#include "gmmdr/error.hpp"
#include "gmmdr/rng.hpp"

namespace gmmdr {

namespace {

Eigen::Matrix3d mat3(std::initializer_list<double> v) {
  Eigen::Matrix3d m;
  auto it = v.begin();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = *it++;
  return m;
}

std::vector<double> equal_priors(int G) { return std::vector<double>(G, 1.0 / G); }

std::vector<int> draw_labels(const ScenarioSpec& spec, const std::vector<double>& priors,
                             Rng& rng) {
  const int G = static_cast<int>(priors.size());
  std::vector<int> labels;
  if (spec.n_per_cluster > 0) {
    for (int g = 0; g < G; ++g) labels.insert(labels.end(), spec.n_per_cluster, g + 1);
    return labels;
  }
  labels.reserve(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    double u = rng.uniform();
    int g = 0;
    while (g < G - 1 && u >= priors[g]) u -= priors[g++];
    labels.push_back(g + 1);
  }
  return labels;
}

}  // namespace

std::string_view to_string(ScenarioBase base) {
  switch (base) {
    case ScenarioBase::chang15: return "chang15";
    case ScenarioBase::synthetic_vvv: return "synthetic_vvv";
    case ScenarioBase::model1_eee: return "model1_eee";
    case ScenarioBase::model2_vev: return "model2_vev";
    case ScenarioBase::model3_vvv: return "model3_vvv";
  }
  return "?";
}

std::string_view to_string(Augmentation aug) {
  switch (aug) {
    case Augmentation::none: return "none";
    case Augmentation::noise: return "noise";
    case Augmentation::noise_redundant: return "noise+redundant";
  }
  return "?";
}

ScenarioBase parse_base(std::string_view name) {
  for (auto b : {ScenarioBase::chang15, ScenarioBase::synthetic_vvv, ScenarioBase::model1_eee,
                 ScenarioBase::model2_vev, ScenarioBase::model3_vvv})
    if (to_string(b) == name) return b;
  throw InvalidArgument("unknown scenario: " + std::string(name));
}

Augmentation parse_augmentation(std::string_view name) {
  if (name == "none") return Augmentation::none;
  if (name == "noise") return Augmentation::noise;
  if (name == "noise+redundant" || name == "redundant" || name == "noise_redundant")
    return Augmentation::noise_redundant;
  throw InvalidArgument("unknown augmentation: " + std::string(name));
}

void ScenarioSpec::validate() const {
  if (n_per_cluster < 0) throw InvalidArgument("n_per_cluster must be >= 0");
  if (n_per_cluster == 0 && n < 2) throw InvalidArgument("n must be >= 2");
  if (highdim_k < 1) throw InvalidArgument("highdim_k must be >= 1");
  if (highdim_k > 1 && base != ScenarioBase::model2_vev)
    throw InvalidArgument("the {3k|3k|4k} scheme is defined for model2_vev only");
  if (highdim_k > 1 && augmentation != Augmentation::noise_redundant)
    throw InvalidArgument("the {3k|3k|4k} scheme requires noise+redundant augmentation");
  if (base == ScenarioBase::chang15) {
    if (augmentation != Augmentation::none || !priors.empty() || n_per_cluster > 0)
      throw InvalidArgument("chang15 takes only n and seed");
  }
  if (!priors.empty()) {
    if (priors.size() != 3) throw InvalidArgument("priors must have three entries");
    double s = 0.0;
    for (double p : priors) {
      if (!(p > 0.0)) throw InvalidArgument("priors must be positive");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-12) throw InvalidArgument("priors must sum to 1");
    if (n_per_cluster > 0) throw InvalidArgument("priors conflict with n_per_cluster");
  }
}

MixtureParams scenario_parameters(ScenarioBase base, const std::vector<double>& priors) {
  MixtureParams p;
  const std::vector<double> pri = priors.empty() ? equal_priors(3) : priors;
  p.weights = Eigen::Map<const Eigen::VectorXd>(pri.data(), 3);
  p.means.resize(3, 3);
  switch (base) {
    case ScenarioBase::model1_eee: {
      p.means << 0, 0, 0, 0, 2, 2, 2, -2, -2;
      const Eigen::Matrix3d s = mat3({2.0, 0.7, 0.8, 0.7, 0.5, 0.3, 0.8, 0.3, 1.0});
      p.covariances = {s, s, s};
      break;
    }
    case ScenarioBase::model2_vev: {
      p.means << 0, 0, 0, 4, -2, 6, -2, -4, 2;
      const double lambda[3] = {0.2, 0.5, 0.8};
      const Eigen::Matrix3d A = Eigen::Vector3d(1, 2, 3).asDiagonal();
      // The orientation matrices are used exactly as printed (they are not
      // orthogonal); D A D^T is still SPD because each D is nonsingular.
      const Eigen::Matrix3d D[3] = {
          mat3({1, 0.6, 0.6, 0.6, 1, 0.6, 0.6, 0.6, 1}),
          mat3({2, -1.2, 1.2, -1.2, 2, -1.2, 1.2, -1.2, 2}),
          mat3({0.5, 0, 0, 0, 0.5, 0, 0, 0, 0.5}),
      };
      for (int g = 0; g < 3; ++g)
        p.covariances.push_back(lambda[g] * D[g] * A * D[g].transpose());
      break;
    }
    case ScenarioBase::synthetic_vvv:
    case ScenarioBase::model3_vvv: {
      p.means << 0, 0, 0, 4, -2, 6, -2, -4, 2;
      // With every off-diagonal at -1.8 the second matrix would be
      // indefinite (eigenvalue -1.6); the (2,3) pair is taken as +1.8, the
      // sign pattern of an anti-correlated first coordinate.
      p.covariances = {
          mat3({1, 0.9, 0.9, 0.9, 1, 0.9, 0.9, 0.9, 1}),
          mat3({2, -1.8, -1.8, -1.8, 2, 1.8, -1.8, 1.8, 2}),
          mat3({0.5, 0, 0, 0, 0.5, 0, 0, 0, 0.5}),
      };
      break;
    }
    case ScenarioBase::chang15:
      throw InvalidArgument("chang15 is not a three-variable mixture scenario");
  }
  for (const auto& s : p.covariances) {
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) throw InvalidArgument("scenario covariance is not SPD");
  }
  return p;
}

Eigen::VectorXd chang_shift() {
  Eigen::VectorXd d(15);
  for (int i = 1; i <= 15; ++i) d(i - 1) = 0.95 - 0.05 * i;
  return d;
}

Eigen::MatrixXd chang_covariance() {
  Eigen::VectorXd f(15);
  f.head(8).setConstant(-0.9);
  f.tail(7).setConstant(0.5);
  Eigen::MatrixXd s = -0.13 * f * f.transpose();
  s.diagonal().setOnes();
  return s;
}

Eigen::MatrixXd sample_normal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int n,
                              Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw InvalidArgument("sample_normal: covariance is not SPD");
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::Index p = mean.size();
  Eigen::MatrixXd out(n, p);
  Eigen::VectorXd z(p);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.normal();
    out.row(i) = (mean + L * z).transpose();
  }
  return out;
}

LabeledDataset gen_chang(int n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("gen_chang: n must be >= 2");
  Rng rng(seed);
  const Eigen::VectorXd d = chang_shift();
  LabeledDataset out;
  out.labels.resize(n);
  for (int i = 0; i < n; ++i) out.labels[i] = rng.uniform() < 0.2 ? 2 : 1;
  out.data = sample_normal(Eigen::VectorXd::Zero(15), chang_covariance(), n, rng);
  for (int i = 0; i < n; ++i)
    out.data.row(i) += ((0.5 + (out.labels[i] - 1)) * d).transpose();
  for (int j = 0; j < 15; ++j) {
    out.clustering_columns.push_back(j);
    out.column_names.push_back("X" + std::to_string(j + 1));
  }
  out.spec.base = ScenarioBase::chang15;
  out.spec.n = n;
  out.spec.seed = seed;
  return out;
}

LabeledDataset gen_synthetic_vvv(int n_per_cluster, Augmentation augmentation,
                                 std::uint64_t seed) {
  ScenarioSpec spec;
  spec.base = ScenarioBase::synthetic_vvv;
  spec.n_per_cluster = n_per_cluster;
  spec.augmentation = augmentation;
  spec.seed = seed;
  return gen_model(spec);
}

LabeledDataset gen_model(const ScenarioSpec& spec) {
  spec.validate();
  if (spec.base == ScenarioBase::chang15) return gen_chang(spec.n, spec.seed);

  const MixtureParams params = scenario_parameters(spec.base, spec.priors);
  const std::vector<double> priors(params.weights.data(), params.weights.data() + 3);
  Rng rng(spec.seed);

  LabeledDataset out;
  out.spec = spec;
  out.labels = draw_labels(spec, priors, rng);
  const int n = static_cast<int>(out.labels.size());
  const int k = spec.highdim_k;
  const int n_cluster = 3 * k;
  const int n_redundant = spec.augmentation == Augmentation::noise_redundant ? 3 * k : 0;
  const int n_noise = spec.augmentation == Augmentation::none    ? 0
                      : spec.augmentation == Augmentation::noise ? 7
                                                                 : 4 * k;
  out.data.resize(n, n_cluster + n_redundant + n_noise);

  std::vector<Eigen::MatrixXd> chol;
  for (const auto& s : params.covariances) chol.push_back(Eigen::LLT<Eigen::MatrixXd>(s).matrixL());

  Eigen::Vector3d z;
  for (int i = 0; i < n; ++i) {
    const int g = out.labels[i] - 1;
    for (int b = 0; b < k; ++b) {
      for (int j = 0; j < 3; ++j) z(j) = rng.normal();
      out.data.block(i, 3 * b, 1, 3) = (params.means.row(g).transpose() + chol[g] * z).transpose();
    }
  }

  if (n_redundant > 0) {
    // Population moments of each clustering variable under the mixture.
    const Eigen::Vector3d mean = params.means.transpose() * params.weights;
    Eigen::Vector3d second = Eigen::Vector3d::Zero();
    for (int g = 0; g < 3; ++g)
      second += params.weights(g) * (params.covariances[g].diagonal().array() +
                                     params.means.row(g).transpose().array().square())
                                        .matrix();
    const Eigen::Vector3d sd = (second - mean.cwiseAbs2()).cwiseSqrt();
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < n_redundant; ++c) {
        const int j = c % 3;
        const double r = kRedundantCorrelation[j];
        const double xs = (out.data(i, c) - mean(j)) / sd(j);
        out.data(i, n_cluster + c) = r * xs + std::sqrt(1.0 - r * r) * rng.normal();
      }
  }
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < n_noise; ++c) out.data(i, n_cluster + n_redundant + c) = rng.normal();

  for (int c = 0; c < n_cluster; ++c) {
    out.clustering_columns.push_back(c);
    out.column_names.push_back("X" + std::to_string(c + 1));
  }
  for (int c = 0; c < n_redundant; ++c) out.column_names.push_back("R" + std::to_string(c + 1));
  for (int c = 0; c < n_noise; ++c) out.column_names.push_back("N" + std::to_string(c + 1));
  return out;
}

}  // namespace gmmdr
