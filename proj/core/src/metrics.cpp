#include "clotkit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "clotkit/errors.hpp"

namespace clotkit {

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) raise(Errc::NonFiniteInput, "softmax of empty vector");
  double max_z = logits[0];
  for (double z : logits) {
    if (!std::isfinite(z)) raise(Errc::NonFiniteInput, "softmax input not finite");
    max_z = std::max(max_z, z);
  }
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - max_z);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

bool is_prob_vector(std::span<const double> p, double tol) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

WmcllInput WmcllInput::with_equal_weights(std::vector<WmcllRow> rows, std::size_t classes) {
  WmcllInput input;
  input.rows = std::move(rows);
  input.class_weights.assign(classes, 1.0);
  return input;
}

namespace {

double clamp_prob(double p, double eps) {
  return std::min(std::max(p, eps), 1.0 - eps);
}

}  // namespace

double wmcll(const WmcllInput& input, double clamp_eps) {
  const std::size_t classes = input.class_weights.size();
  if (classes == 0) raise(Errc::InvalidParams, "no class weights");
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) {
    raise(Errc::InvalidParams, "clamp_eps must lie in (0, 0.5)");
  }
  for (double w : input.class_weights) {
    if (!(w > 0.0)) raise(Errc::InvalidParams, "class weights must be positive");
  }

  // Per-class log-prob sums and row counts, accumulated in row order.
  std::vector<double> log_sum(classes, 0.0);
  std::vector<double> count(classes, 0.0);
  for (const auto& row : input.rows) {
    if (row.true_class < 0 || static_cast<std::size_t>(row.true_class) >= classes) {
      raise(Errc::InvalidParams, "row class index out of range");
    }
    if (row.probs.size() != classes) {
      raise(Errc::ShapeMismatch, "row probability vector has wrong length");
    }
    log_sum[row.true_class] += std::log(clamp_prob(row.probs[row.true_class], clamp_eps));
    count[row.true_class] += 1.0;
  }

  double weighted = 0.0;
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < classes; ++i) {
    if (count[i] == 0.0) {
      raise(Errc::ClassAbsent, "class " + std::to_string(i) + " has no rows");
    }
    weighted += input.class_weights[i] * (log_sum[i] / count[i]);
    weight_sum += input.class_weights[i];
  }
  return -weighted / weight_sum;
}

std::vector<double> smooth_labels(int true_class, double epsilon, int classes) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    raise(Errc::InvalidParams, "epsilon must lie in [0, 1)");
  }
  if (true_class < 0 || true_class >= classes) {
    raise(Errc::InvalidParams, "true_class out of range");
  }
  std::vector<double> t(classes, epsilon / classes);
  t[true_class] = (1.0 - epsilon) + epsilon / classes;
  return t;
}

double smoothed_wmcll(const std::vector<std::vector<double>>& targets,
                      const std::vector<std::vector<double>>& probs,
                      std::span<const double> class_weights,
                      double clamp_eps) {
  const std::size_t classes = class_weights.size();
  if (classes == 0) raise(Errc::InvalidParams, "no class weights");
  if (targets.size() != probs.size()) {
    raise(Errc::ShapeMismatch, "targets and probs row counts differ");
  }
  for (double w : class_weights) {
    if (!(w > 0.0)) raise(Errc::InvalidParams, "class weights must be positive");
  }

  // Same accumulation pattern as wmcll so one-hot targets reproduce it
  // bit for bit: soft log-prob sums and soft counts per class, row order.
  std::vector<double> log_sum(classes, 0.0);
  std::vector<double> soft_count(classes, 0.0);
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (targets[j].size() != classes || probs[j].size() != classes) {
      raise(Errc::ShapeMismatch, "row vector has wrong length");
    }
    for (std::size_t i = 0; i < classes; ++i) {
      log_sum[i] += targets[j][i] * std::log(clamp_prob(probs[j][i], clamp_eps));
      soft_count[i] += targets[j][i];
    }
  }

  double weighted = 0.0;
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < classes; ++i) {
    if (soft_count[i] == 0.0) {
      raise(Errc::ClassAbsent, "class " + std::to_string(i) + " has zero soft count");
    }
    weighted += class_weights[i] * (log_sum[i] / soft_count[i]);
    weight_sum += class_weights[i];
  }
  return -weighted / weight_sum;
}

double accuracy(const WmcllInput& input) {
  if (input.rows.empty()) raise(Errc::EmptyIndex, "accuracy over zero rows");
  std::size_t hits = 0;
  for (const auto& row : input.rows) {
    auto best = std::max_element(row.probs.begin(), row.probs.end());
    if (static_cast<int>(best - row.probs.begin()) == row.true_class) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(input.rows.size());
}

}  // namespace clotkit
