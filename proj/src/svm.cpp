#include "ideotrack/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "ideotrack/error.hpp"
#include "ideotrack/metrics.hpp"

namespace ideotrack {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Kernels

KernelKind kind_of(const Kernel& kernel) {
  return std::holds_alternative<LinearKernel>(kernel) ? KernelKind::linear : KernelKind::rbf;
}

std::string to_string(KernelKind kind) { return kind == KernelKind::linear ? "linear" : "rbf"; }

std::optional<KernelKind> parse_kernel_kind(std::string_view text) {
  if (text == "linear") return KernelKind::linear;
  if (text == "rbf") return KernelKind::rbf;
  return std::nullopt;
}

double kernel_value(const Kernel& kernel, const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b) {
  if (const auto* rbf = std::get_if<RbfKernel>(&kernel)) return std::exp(-rbf->gamma * (a - b).squaredNorm());
  return a.dot(b);
}

MatrixXd gram_matrix(const Kernel& kernel, const Eigen::Ref<const MatrixXd>& a, const Eigen::Ref<const MatrixXd>& b) {
  if (a.cols() != b.cols()) throw Error(ErrorKind::dimension_mismatch, "kernel operands differ in width");
  MatrixXd cross = a * b.transpose();
  if (const auto* rbf = std::get_if<RbfKernel>(&kernel)) {
    const VectorXd na = a.rowwise().squaredNorm();
    const VectorXd nb = b.rowwise().squaredNorm();
    for (Index j = 0; j < cross.cols(); ++j) {
      for (Index i = 0; i < cross.rows(); ++i) {
        const double d2 = std::max(0.0, na[i] + nb[j] - 2.0 * cross(i, j));
        cross(i, j) = std::exp(-rbf->gamma * d2);
      }
    }
  }
  return cross;
}

// ---------------------------------------------------------------------------
// SMO

DualSolution solve_dual(const Eigen::Ref<const MatrixXd>& gram, std::span<const Index> rows, std::span<const int> y,
                        const Eigen::Ref<const VectorXd>& upper, const SolverOptions& options,
                        std::span<const std::size_t> tie_keys) {
  const auto n = static_cast<Index>(rows.size());
  if (static_cast<Index>(y.size()) != n || upper.size() != n ||
      (!tie_keys.empty() && static_cast<Index>(tie_keys.size()) != n)) {
    throw Error(ErrorKind::dimension_mismatch, "dual problem arrays differ in length");
  }
  constexpr double tau = 1e-12;

  DualSolution out;
  out.upper = upper;
  VectorXd& alpha = out.alpha;
  alpha = VectorXd::Zero(n);
  VectorXd grad = VectorXd::Constant(n, -1.0);  // Q alpha - 1

  const auto key = [&](Index t) { return tie_keys.empty() ? std::size_t{0} : tie_keys[static_cast<std::size_t>(t)]; };
  const auto k = [&](Index a, Index b) { return gram(rows[static_cast<std::size_t>(a)], rows[static_cast<std::size_t>(b)]); };
  const auto yv = [&](Index t) { return static_cast<double>(y[static_cast<std::size_t>(t)]); };
  const auto in_up = [&](Index t) { return yv(t) > 0 ? alpha[t] < upper[t] : alpha[t] > 0; };
  const auto in_low = [&](Index t) { return yv(t) > 0 ? alpha[t] > 0 : alpha[t] < upper[t]; };

  while (true) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    Index i = -1;
    Index j = -1;
    for (Index t = 0; t < n; ++t) {
      const double v = -yv(t) * grad[t];
      if (in_up(t) && (v > gmax || (v == gmax && key(t) < key(i)))) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && (v < gmin || (v == gmin && key(t) < key(j)))) {
        gmin = v;
        j = t;
      }
    }
    if (i < 0 || j < 0 || gmax - gmin < options.tolerance) {
      out.converged = true;
      break;
    }
    if (out.iterations >= options.max_iterations) break;
    ++out.iterations;

    const double yi = yv(i);
    const double yj = yv(j);
    const double kii = k(i, i);
    const double kjj = k(j, j);
    const double qij = yi * yj * k(i, j);
    const double ci = upper[i];
    const double cj = upper[j];
    const double old_i = alpha[i];
    const double old_j = alpha[j];

    if (yi != yj) {
      double quad = kii + kjj + 2.0 * qij;
      if (quad <= 0) quad = tau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
      }
      if (diff > ci - cj) {
        if (alpha[i] > ci) { alpha[i] = ci; alpha[j] = ci - diff; }
      } else {
        if (alpha[j] > cj) { alpha[j] = cj; alpha[i] = cj + diff; }
      }
    } else {
      double quad = kii + kjj - 2.0 * qij;
      if (quad <= 0) quad = tau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > ci) {
        if (alpha[i] > ci) { alpha[i] = ci; alpha[j] = sum - ci; }
      } else {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
      }
      if (sum > cj) {
        if (alpha[j] > cj) { alpha[j] = cj; alpha[i] = sum - cj; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
      }
    }

    const double di = (alpha[i] - old_i) * yi;
    const double dj = (alpha[j] - old_j) * yj;
    const double* col_i = gram.col(rows[static_cast<std::size_t>(i)]).data();
    const double* col_j = gram.col(rows[static_cast<std::size_t>(j)]).data();
    for (Index t = 0; t < n; ++t) {
      const Index r = rows[static_cast<std::size_t>(t)];
      grad[t] += yv(t) * (col_i[r] * di + col_j[r] * dj);
    }
  }

  // Offset from free variables, or the midpoint of the feasible interval.
  double upper_bound = std::numeric_limits<double>::infinity();
  double lower_bound = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  Index free_count = 0;
  for (Index t = 0; t < n; ++t) {
    const double yg = yv(t) * grad[t];
    if (alpha[t] >= upper[t]) {
      if (yv(t) < 0) upper_bound = std::min(upper_bound, yg); else lower_bound = std::max(lower_bound, yg);
    } else if (alpha[t] <= 0) {
      if (yv(t) > 0) upper_bound = std::min(upper_bound, yg); else lower_bound = std::max(lower_bound, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (upper_bound + lower_bound) / 2.0;
  out.bias = -rho;
  out.objective = alpha.sum() - 0.5 * alpha.dot(grad + VectorXd::Ones(n));
  return out;
}

// ---------------------------------------------------------------------------
// Binary machines

double PlattParams::operator()(double score) const {
  const double f = a * score + b;
  // Stable for large |f| in either direction.
  return f >= 0 ? std::exp(-f) / (1.0 + std::exp(-f)) : 1.0 / (1.0 + std::exp(f));
}

ClassWeights ClassWeights::balanced(std::span<const int> y) {
  double positives = 0;
  for (const int v : y) positives += v > 0;
  const double total = static_cast<double>(y.size());
  const double negatives = total - positives;
  ClassWeights w;
  if (positives > 0) w.positive = total / (2.0 * positives);
  if (negatives > 0) w.negative = total / (2.0 * negatives);
  return w;
}

namespace {

void require_finite(const Eigen::Ref<const MatrixXd>& x) {
  if (!x.allFinite()) throw Error(ErrorKind::non_finite_feature, "training data contains NaN or infinity");
}

/// Rank of each row in lexicographic order; identical rows share a rank.
std::vector<std::size_t> row_ranks(const Eigen::Ref<const MatrixXd>& x) {
  std::vector<Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  const auto less = [&](Index a, Index b) {
    for (Index c = 0; c < x.cols(); ++c) {
      if (x(a, c) != x(b, c)) return x(a, c) < x(b, c);
    }
    return false;
  };
  std::stable_sort(order.begin(), order.end(), less);
  std::vector<std::size_t> rank(order.size());
  std::size_t current = 0;
  for (std::size_t p = 0; p < order.size(); ++p) {
    if (p > 0 && less(order[p - 1], order[p])) current = p;
    rank[static_cast<std::size_t>(order[p])] = current;
  }
  return rank;
}

/// Dual problem over `rows` of a shared Gram matrix.
struct IndexedProblem {
  const Eigen::Ref<const MatrixXd>& x;
  const MatrixXd& gram;
  const std::vector<std::size_t>& ranks;
  const Kernel& kernel;
};

BinaryFit fit_indexed(const IndexedProblem& problem, std::span<const Index> rows, std::span<const int> y, double c,
                      const ClassWeights& weights, const SolverOptions& options) {
  const auto n = rows.size();
  bool has_pos = false;
  bool has_neg = false;
  for (const int v : y) {
    if (v != 1 && v != -1) throw Error(ErrorKind::invalid_argument, "binary labels must be +1 or -1");
    (v > 0 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw Error(ErrorKind::single_class, "binary training needs both +1 and -1 labels");

  VectorXd upper(static_cast<Index>(n));
  std::vector<std::size_t> keys(n);
  for (std::size_t t = 0; t < n; ++t) {
    upper[static_cast<Index>(t)] = c * (y[t] > 0 ? weights.positive : weights.negative);
    keys[t] = 2 * problem.ranks[static_cast<std::size_t>(rows[t])] + (y[t] > 0 ? 1 : 0);
  }

  BinaryFit fit;
  fit.dual = solve_dual(problem.gram, rows, y, upper, options, keys);

  std::map<Index, double> coefficient;
  for (std::size_t t = 0; t < n; ++t) {
    const double a = fit.dual.alpha[static_cast<Index>(t)];
    if (a > 0) coefficient[rows[t]] += a * y[t];
  }
  fit.model.kernel = problem.kernel;
  fit.model.bias = fit.dual.bias;
  fit.model.support_vectors.resize(static_cast<Index>(coefficient.size()), problem.x.cols());
  fit.model.coefficients.resize(static_cast<Index>(coefficient.size()));
  Index s = 0;
  for (const auto& [row, value] : coefficient) {
    fit.model.support_vectors.row(s) = problem.x.row(row);
    fit.model.coefficients[s] = value;
    ++s;
  }
  return fit;
}

/// f(x_r) for a row of the shared data, straight from the dual variables.
double decision_from_gram(const IndexedProblem& problem, const BinaryFit& fit, std::span<const Index> rows,
                          std::span<const int> y, Index r) {
  double f = fit.dual.bias;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const double a = fit.dual.alpha[static_cast<Index>(t)];
    if (a > 0) f += a * y[t] * problem.gram(rows[t], r);
  }
  return f;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t x = seed ^ (a * 0x9E3779B97F4A7C15ull) ^ (b * 0xC2B2AE3D27D4EB4Full);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

BinaryFit fit_binary(const Eigen::Ref<const MatrixXd>& x, std::span<const int> y, double c, const Kernel& kernel,
                     const ClassWeights& weights, const SolverOptions& options) {
  if (static_cast<Index>(y.size()) != x.rows()) throw Error(ErrorKind::dimension_mismatch, "labels do not match rows");
  if (!(c > 0)) throw Error(ErrorKind::invalid_argument, "C must be positive");
  if (const auto* rbf = std::get_if<RbfKernel>(&kernel); rbf && !(rbf->gamma > 0)) {
    throw Error(ErrorKind::invalid_argument, "RBF gamma must be positive");
  }
  require_finite(x);
  const MatrixXd gram = gram_matrix(kernel, x, x);
  const auto ranks = row_ranks(x);
  std::vector<Index> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  return fit_indexed({x, gram, ranks, kernel}, rows, y, c, weights, options);
}

double decision(const BinaryModel& model, const Eigen::Ref<const VectorXd>& x) {
  if (x.size() != model.support_vectors.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "model expects dimension " +
                                                   std::to_string(model.support_vectors.cols()) + ", got " +
                                                   std::to_string(x.size()));
  }
  double f = model.bias;
  for (Index s = 0; s < model.support_vectors.rows(); ++s) {
    f += model.coefficients[s] * kernel_value(model.kernel, model.support_vectors.row(s).transpose(), x);
  }
  return f;
}

VectorXd decision_rows(const BinaryModel& model, const Eigen::Ref<const MatrixXd>& x) {
  if (x.cols() != model.support_vectors.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "model expects " + std::to_string(model.support_vectors.cols()) +
                                                   " columns, got " + std::to_string(x.cols()));
  }
  if (model.support_vectors.rows() == 0) return VectorXd::Constant(x.rows(), model.bias);
  return (gram_matrix(model.kernel, x, model.support_vectors) * model.coefficients).array() + model.bias;
}

PlattParams calibrate(std::span<const double> scores, std::span<const int> y) {
  if (scores.size() != y.size()) throw Error(ErrorKind::dimension_mismatch, "scores and labels differ in length");
  double prior1 = 0;
  double prior0 = 0;
  for (const int v : y) (v > 0 ? prior1 : prior0) += 1;
  if (prior1 == 0 || prior0 == 0) throw Error(ErrorKind::single_class, "calibration needs both classes");
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  if (*hi_it - *lo_it <= 1e-12 * std::max(1.0, std::abs(*hi_it))) {
    throw Error(ErrorKind::degenerate_calibration, "decision scores are constant");
  }

  constexpr int max_iterations = 100;
  constexpr double min_step = 1e-10;
  constexpr double sigma = 1e-12;
  constexpr double eps = 1e-5;
  const double hi_target = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo_target = 1.0 / (prior0 + 2.0);
  std::vector<double> target(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) target[i] = y[i] > 0 ? hi_target : lo_target;

  const auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double fapb = scores[i] * a + b;
      f += fapb >= 0 ? target[i] * fapb + std::log1p(std::exp(-fapb))
                     : (target[i] - 1.0) * fapb + std::log1p(std::exp(fapb));
    }
    return f;
  };

  PlattParams p{0.0, std::log((prior0 + 1.0) / (prior1 + 1.0))};
  double fval = objective(p.a, p.b);
  for (int iter = 0; iter < max_iterations; ++iter) {
    double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double fapb = scores[i] * p.a + p.b;
      double prob, q;
      if (fapb >= 0) {
        prob = std::exp(-fapb) / (1.0 + std::exp(-fapb));
        q = 1.0 / (1.0 + std::exp(-fapb));
      } else {
        prob = 1.0 / (1.0 + std::exp(fapb));
        q = std::exp(fapb) / (1.0 + std::exp(fapb));
      }
      const double d2 = prob * q;
      h11 += scores[i] * scores[i] * d2;
      h22 += d2;
      h21 += scores[i] * d2;
      const double d1 = target[i] - prob;
      g1 += scores[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < eps && std::abs(g2) < eps) break;

    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    while (step >= min_step) {
      const double na = p.a + step * da;
      const double nb = p.b + step * db;
      const double nf = objective(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        p = {na, nb};
        fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < min_step) break;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Up-sampling

std::vector<std::size_t> upsample_indices(std::span<const int> labels, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  std::size_t majority = 0;
  for (const auto& entry : groups) majority = std::max(majority, entry.second.size());

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out;
  out.reserve(majority * groups.size());
  for (const auto& [label, members] : groups) {
    out.insert(out.end(), members.begin(), members.end());
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    for (std::size_t extra = members.size(); extra < majority; ++extra) out.push_back(members[pick(rng)]);
  }
  return out;
}

Upsampled upsample(const Eigen::Ref<const MatrixXd>& x, std::span<const int> y, std::uint64_t seed) {
  if (static_cast<Index>(y.size()) != x.rows()) throw Error(ErrorKind::dimension_mismatch, "labels do not match rows");
  const auto indices = upsample_indices(y, seed);
  Upsampled out;
  out.x.resize(static_cast<Index>(indices.size()), x.cols());
  out.y.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.x.row(static_cast<Index>(i)) = x.row(static_cast<Index>(indices[i]));
    out.y.push_back(y[indices[i]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Multiclass

Index argmax_prefer_last(const Eigen::Ref<const VectorXd>& values) {
  Index best = 0;
  for (Index i = 1; i < values.size(); ++i) {
    if (values[i] >= values[best]) best = i;
  }
  return best;
}

namespace {

double machine_probability(const BinaryModel& machine, double score) {
  if (machine.calibration) return (*machine.calibration)(score);
  return 1.0 / (1.0 + std::exp(-score));
}

}  // namespace

VectorXd MulticlassModel::probabilities(const Eigen::Ref<const VectorXd>& x) const {
  const auto k = static_cast<Index>(classes.size());
  VectorXd p(k);
  if (k == 2) {
    const double positive = machine_probability(machines.at(0), decision(machines[0], x));
    p << 1.0 - positive, positive;
    return p;
  }
  for (Index c = 0; c < k; ++c) {
    p[c] = machine_probability(machines.at(static_cast<std::size_t>(c)), decision(machines[static_cast<std::size_t>(c)], x));
  }
  const double total = p.sum();
  if (total > 0) return p / total;
  return VectorXd::Constant(k, 1.0 / static_cast<double>(k));
}

int MulticlassModel::predict(const Eigen::Ref<const VectorXd>& x) const {
  return classes[static_cast<std::size_t>(argmax_prefer_last(probabilities(x)))];
}

MulticlassModel train_multiclass(const Eigen::Ref<const MatrixXd>& x, std::span<const int> y, double c,
                                 const Kernel& kernel, const TrainOptions& options) {
  if (static_cast<Index>(y.size()) != x.rows()) throw Error(ErrorKind::dimension_mismatch, "labels do not match rows");
  if (!(c > 0)) throw Error(ErrorKind::invalid_argument, "C must be positive");
  if (const auto* rbf = std::get_if<RbfKernel>(&kernel); rbf && !(rbf->gamma > 0)) {
    throw Error(ErrorKind::invalid_argument, "RBF gamma must be positive");
  }
  require_finite(x);

  MulticlassModel model;
  model.classes.assign(y.begin(), y.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  if (model.classes.size() < 2) throw Error(ErrorKind::single_class, "need at least two classes");

  const MatrixXd gram = gram_matrix(kernel, x, x);
  const auto ranks = row_ranks(x);
  const IndexedProblem problem{x, gram, ranks, kernel};
  const auto n = static_cast<std::size_t>(x.rows());

  // Builds the (optionally up-sampled) row list for a subset of samples.
  const auto training_rows = [&](const std::vector<std::size_t>& subset, std::uint64_t seed) {
    std::vector<Index> rows;
    if (!options.upsample) {
      rows.assign(subset.begin(), subset.end());
      return rows;
    }
    std::vector<int> labels(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) labels[i] = y[subset[i]];
    for (const auto p : upsample_indices(labels, seed)) rows.push_back(static_cast<Index>(subset[p]));
    return rows;
  };
  const auto binary_labels = [&](const std::vector<Index>& rows, int positive) {
    std::vector<int> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = y[static_cast<std::size_t>(rows[i])] == positive ? 1 : -1;
    return out;
  };
  const auto fit_subset = [&](const std::vector<Index>& rows, const std::vector<int>& yb) {
    const auto weights = options.weights == WeightMode::balanced ? ClassWeights::balanced(yb) : ClassWeights{};
    return fit_indexed(problem, rows, yb, c, weights, options.solver);
  };

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto all_rows = training_rows(all, mix_seed(options.seed, 1));

  std::optional<FoldPlan> internal;
  if (options.calibration_folds >= 2 && n >= options.calibration_folds) {
    internal = kfold(n, options.calibration_folds, mix_seed(options.seed, 2), y);
  }
  std::vector<std::vector<Index>> internal_rows;
  if (internal) {
    for (std::size_t f = 0; f < internal->size(); ++f) {
      internal_rows.push_back(training_rows(internal->training_indices(f), mix_seed(options.seed, 3, f)));
    }
  }

  std::vector<int> targets;
  if (model.classes.size() == 2) targets.push_back(model.classes[1]);
  else targets = model.classes;

  for (const int positive : targets) {
    const auto yb_all = binary_labels(all_rows, positive);
    const auto final_fit = fit_subset(all_rows, yb_all);

    std::vector<double> scores(n);
    std::vector<int> truth(n);
    for (std::size_t i = 0; i < n; ++i) truth[i] = y[i] == positive ? 1 : -1;
    bool out_of_fold = internal.has_value();
    if (internal) {
      for (std::size_t f = 0; f < internal->size() && out_of_fold; ++f) {
        const auto& rows = internal_rows[f];
        const auto yb = binary_labels(rows, positive);
        if (std::find(yb.begin(), yb.end(), 1) == yb.end() || std::find(yb.begin(), yb.end(), -1) == yb.end()) {
          out_of_fold = false;
          break;
        }
        const auto fit = fit_subset(rows, yb);
        for (const auto r : internal->folds[f]) {
          scores[r] = decision_from_gram(problem, fit, rows, yb, static_cast<Index>(r));
        }
      }
    }
    // Too few samples of a class to hold some out: calibrate in-sample.
    if (!out_of_fold) {
      for (std::size_t r = 0; r < n; ++r) {
        scores[r] = decision_from_gram(problem, final_fit, all_rows, yb_all, static_cast<Index>(r));
      }
    }

    // Calibrate on the same class mix the machine was trained on, otherwise
    // the sigmoid reintroduces the priors that up-sampling removed.
    if (options.upsample) {
      std::vector<double> mixed_scores;
      std::vector<int> mixed_truth;
      for (const auto r : all_rows) {
        mixed_scores.push_back(scores[static_cast<std::size_t>(r)]);
        mixed_truth.push_back(truth[static_cast<std::size_t>(r)]);
      }
      scores = std::move(mixed_scores);
      truth = std::move(mixed_truth);
    }

    BinaryModel machine = final_fit.model;
    machine.calibration = calibrate(scores, truth);
    model.machines.push_back(std::move(machine));
  }
  return model;
}

VectorXd Classifier::probabilities(const Eigen::Ref<const VectorXd>& x) const {
  if (pca) return svm.probabilities(project(*pca, x));
  return svm.probabilities(x);
}

int Classifier::predict(const Eigen::Ref<const VectorXd>& x) const {
  if (pca) return svm.predict(project(*pca, x));
  return svm.predict(x);
}

// ---------------------------------------------------------------------------
// Serialisation

nlohmann::json to_json(const BinaryModel& model) {
  nlohmann::ordered_json j;
  j["kernel"] = to_string(kind_of(model.kernel));
  if (const auto* rbf = std::get_if<RbfKernel>(&model.kernel)) j["gamma"] = rbf->gamma;
  auto rows = nlohmann::ordered_json::array();
  for (Index s = 0; s < model.support_vectors.rows(); ++s) {
    const VectorXd row = model.support_vectors.row(s).transpose();
    rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  j["dimension"] = model.support_vectors.cols();
  j["support_vectors"] = rows;
  j["coefficients"] = std::vector<double>(model.coefficients.data(), model.coefficients.data() + model.coefficients.size());
  j["bias"] = model.bias;
  if (model.calibration) {
    j["calibration"] = {{"a", model.calibration->a}, {"b", model.calibration->b}};
  } else {
    j["calibration"] = nullptr;
  }
  return j;
}

BinaryModel binary_model_from_json(const nlohmann::json& j) {
  BinaryModel model;
  try {
    const auto kind = parse_kernel_kind(j.at("kernel").get<std::string>());
    if (!kind) throw Error(ErrorKind::schema, "unknown kernel");
    if (*kind == KernelKind::rbf) model.kernel = RbfKernel{j.at("gamma").get<double>()};
    else model.kernel = LinearKernel{};
    const auto d = j.at("dimension").get<Index>();
    const auto& rows = j.at("support_vectors");
    const auto coefficients = j.at("coefficients").get<std::vector<double>>();
    if (rows.size() != coefficients.size()) throw Error(ErrorKind::schema, "support vector count mismatch");
    model.support_vectors.resize(static_cast<Index>(rows.size()), d);
    for (std::size_t s = 0; s < rows.size(); ++s) {
      const auto row = rows[s].get<std::vector<double>>();
      if (static_cast<Index>(row.size()) != d) throw Error(ErrorKind::schema, "support vector width mismatch");
      model.support_vectors.row(static_cast<Index>(s)) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), d);
    }
    model.coefficients = Eigen::Map<const VectorXd>(coefficients.data(), static_cast<Index>(coefficients.size()));
    model.bias = j.at("bias").get<double>();
    if (j.contains("calibration") && !j["calibration"].is_null()) {
      model.calibration = PlattParams{j["calibration"].at("a").get<double>(), j["calibration"].at("b").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("svm model: ") + e.what());
  }
  return model;
}

nlohmann::json to_json(const Classifier& classifier) {
  nlohmann::json j;
  j["feature_kind"] = classifier.feature_kind;
  j["pca"] = classifier.pca ? nlohmann::json(to_json(*classifier.pca)) : nlohmann::json(nullptr);
  j["classes"] = classifier.svm.classes;
  auto machines = nlohmann::json::array();
  for (const auto& m : classifier.svm.machines) machines.push_back(to_json(m));
  j["machines"] = machines;
  return j;
}

Classifier classifier_from_json(const nlohmann::json& j) {
  Classifier c;
  try {
    c.feature_kind = j.at("feature_kind").get<std::string>();
    if (!j.at("pca").is_null()) c.pca = projection_from_json<double>(j["pca"]);
    c.svm.classes = j.at("classes").get<std::vector<int>>();
    for (const auto& m : j.at("machines")) c.svm.machines.push_back(binary_model_from_json(m));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("classifier: ") + e.what());
  }
  const auto expected = c.svm.classes.size() == 2 ? 1 : c.svm.classes.size();
  if (c.svm.classes.size() < 2 || c.svm.machines.size() != expected) {
    throw Error(ErrorKind::schema, "classifier machine count does not match classes");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Grid search

std::string to_string(Metric metric) {
  return metric == Metric::balanced_accuracy ? "balanced_accuracy" : "accuracy";
}

std::optional<Metric> parse_metric(std::string_view text) {
  if (text == "balanced_accuracy") return Metric::balanced_accuracy;
  if (text == "accuracy") return Metric::accuracy;
  return std::nullopt;
}

Kernel GridConfig::make_kernel() const {
  if (kernel == KernelKind::linear) return LinearKernel{};
  return RbfKernel{gamma};
}

GridSpec GridSpec::defaults() {
  GridSpec spec;
  for (int e = -3; e <= 7; ++e) spec.c_values.push_back(std::ldexp(1.0, e));
  for (int e = -7; e <= 3; ++e) spec.gamma_values.push_back(std::ldexp(1.0, e));
  spec.kernels = {KernelKind::linear, KernelKind::rbf};
  spec.pca_components = {2, 8, 32, 128, std::nullopt};
  return spec;
}

void GridSpec::validate() const {
  if (c_values.empty() || kernels.empty() || pca_components.empty()) {
    throw Error(ErrorKind::invalid_config, "grid needs at least one C, kernel and PCA setting");
  }
  for (const double c : c_values) {
    if (!(c > 0)) throw Error(ErrorKind::invalid_config, "grid C values must be positive");
  }
  const bool rbf = std::find(kernels.begin(), kernels.end(), KernelKind::rbf) != kernels.end();
  if (rbf && gamma_values.empty()) throw Error(ErrorKind::invalid_config, "RBF grid needs gamma values");
  for (const double g : gamma_values) {
    if (!(g > 0)) throw Error(ErrorKind::invalid_config, "grid gamma values must be positive");
  }
  for (const auto& k : pca_components) {
    if (k && *k < 1) throw Error(ErrorKind::invalid_config, "PCA component counts must be positive");
  }
  if (folds < 2) throw Error(ErrorKind::invalid_config, "fold count must be at least 2");
}

std::vector<GridConfig> GridSpec::configurations() const {
  std::vector<GridConfig> out;
  for (const auto kernel : kernels) {
    for (const double c : c_values) {
      const std::vector<double> gammas = kernel == KernelKind::rbf ? gamma_values : std::vector<double>{0.0};
      for (const double gamma : gammas) {
        for (const auto& pca : pca_components) out.push_back({kernel, c, gamma, pca});
      }
    }
  }
  return out;
}

CrossValidation cross_validate(const GridConfig& config, const Eigen::Ref<const MatrixXd>& x, std::span<const int> y,
                               const std::vector<std::vector<std::size_t>>& folds, const TrainOptions& options) {
  if (static_cast<Index>(y.size()) != x.rows()) throw Error(ErrorKind::dimension_mismatch, "labels do not match rows");
  CrossValidation out;
  out.classes.assign(y.begin(), y.end());
  std::sort(out.classes.begin(), out.classes.end());
  out.classes.erase(std::unique(out.classes.begin(), out.classes.end()), out.classes.end());
  const auto k = static_cast<Index>(out.classes.size());
  const auto column_of = [&](int label) {
    return static_cast<Index>(std::lower_bound(out.classes.begin(), out.classes.end(), label) - out.classes.begin());
  };

  out.probabilities = MatrixXd::Zero(x.rows(), k);
  out.predicted.assign(y.size(), out.classes.front());
  std::vector<int> covered(y.size(), 0);

  const Kernel kernel = config.make_kernel();
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<char> in_test(y.size(), 0);
    for (const auto i : folds[f]) in_test[i] = 1;
    std::vector<Index> train;
    std::vector<int> train_y;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!in_test[i]) {
        train.push_back(static_cast<Index>(i));
        train_y.push_back(y[i]);
      }
    }
    std::vector<Index> test(folds[f].begin(), folds[f].end());

    MatrixXd train_x = x(train, Eigen::all);
    MatrixXd test_x = x(test, Eigen::all);
    if (config.pca_components) {
      const auto pca = fit_pca(train_x, *config.pca_components);
      train_x = project_rows(pca, train_x);
      test_x = project_rows(pca, test_x);
    }
    TrainOptions fold_options = options;
    fold_options.seed = mix_seed(options.seed, 17, f);
    const auto model = train_multiclass(train_x, train_y, config.c, kernel, fold_options);

    for (std::size_t t = 0; t < test.size(); ++t) {
      const auto row = static_cast<std::size_t>(test[t]);
      const VectorXd p = model.probabilities(test_x.row(static_cast<Index>(t)).transpose());
      VectorXd full = VectorXd::Zero(k);
      for (std::size_t c = 0; c < model.classes.size(); ++c) full[column_of(model.classes[c])] = p[static_cast<Index>(c)];
      out.probabilities.row(static_cast<Index>(row)) = full.transpose();
      out.predicted[row] = out.classes[static_cast<std::size_t>(argmax_prefer_last(full))];
      ++covered[row];
    }
  }
  for (const int c : covered) {
    if (c != 1) throw Error(ErrorKind::invalid_argument, "folds must cover every sample exactly once");
  }
  return out;
}

namespace {

double score_outcome(const CrossValidation& cv, std::span<const int> y, Metric metric) {
  std::vector<std::string> names;
  for (const int c : cv.classes) names.push_back(std::to_string(c));
  const auto position = [&](int label) {
    return static_cast<int>(std::lower_bound(cv.classes.begin(), cv.classes.end(), label) - cv.classes.begin());
  };
  std::vector<int> actual(y.size());
  std::vector<int> predicted(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    actual[i] = position(y[i]);
    predicted[i] = position(cv.predicted[i]);
  }
  const auto cm = confusion(actual, predicted, names);
  return metric == Metric::balanced_accuracy ? balanced_accuracy(cm) : accuracy(cm);
}

// True when `a` should replace the current best `b` at equal metric.
bool preferred_on_tie(const GridConfig& a, const GridConfig& b) {
  if (a.c != b.c) return a.c < b.c;
  const double ga = a.kernel == KernelKind::linear ? 0.0 : a.gamma;
  const double gb = b.kernel == KernelKind::linear ? 0.0 : b.gamma;
  if (ga != gb) return ga < gb;
  const auto pa = a.pca_components.value_or(std::numeric_limits<Index>::max());
  const auto pb = b.pca_components.value_or(std::numeric_limits<Index>::max());
  return pa < pb;
}

}  // namespace

GridResult grid_search(const GridSpec& spec, const Eigen::Ref<const MatrixXd>& x, std::span<const int> y) {
  spec.validate();
  if (static_cast<Index>(y.size()) != x.rows()) throw Error(ErrorKind::dimension_mismatch, "labels do not match rows");
  const auto plan = kfold(y.size(), spec.folds, spec.seed, spec.stratified ? y : std::span<const int>{});

  TrainOptions options;
  options.upsample = spec.upsample;
  options.weights = spec.weights;
  options.seed = spec.seed;

  GridResult result;
  std::optional<std::size_t> best;
  for (const auto& config : spec.configurations()) {
    GridCell cell{config, std::nullopt, {}};
    std::optional<CrossValidation> outcome;
    try {
      outcome = cross_validate(config, x, y, plan.folds, options);
      cell.metric = score_outcome(*outcome, y, spec.metric);
    } catch (const Error& e) {
      cell.error = e.what();
    }
    result.cells.push_back(cell);
    if (!cell.metric) continue;
    const auto index = result.cells.size() - 1;
    if (!best) {
      best = index;
    } else {
      const auto& current = result.cells[*best];
      if (*cell.metric > *current.metric ||
          (*cell.metric == *current.metric && preferred_on_tie(cell.config, current.config))) {
        best = index;
      }
    }
    if (best == index) result.best_outcome = std::move(*outcome);
  }
  if (!best) {
    throw Error(ErrorKind::invalid_argument,
                "every grid configuration failed: " + (result.cells.empty() ? std::string() : result.cells.front().error));
  }
  result.best = *best;
  return result;
}

namespace {

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string out = "\"";
  for (const char ch : value) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

void write_grid_csv(const GridResult& result, std::ostream& out) {
  out << "kernel,C,gamma,pca_components,metric,error\n";
  for (const auto& cell : result.cells) {
    const auto& c = cell.config;
    out << to_string(c.kernel) << ',' << format_number(c.c) << ','
        << (c.kernel == KernelKind::rbf ? format_number(c.gamma) : std::string()) << ','
        << (c.pca_components ? std::to_string(*c.pca_components) : std::string("none")) << ','
        << (cell.metric ? format_number(*cell.metric) : std::string()) << ',' << csv_field(cell.error) << '\n';
  }
}

}  // namespace ideotrack
