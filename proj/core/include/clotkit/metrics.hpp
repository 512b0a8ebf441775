#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace clotkit {

/// Numerically stable softmax: p_k = exp(z_k - max z) / sum exp(z_j - max z).
std::vector<double> softmax(std::span<const double> logits);

/// Checks the probability-simplex invariants (each in [0,1], sum 1 +- tol).
bool is_prob_vector(std::span<const double> p, double tol = 1e-9);

/// One scored subject: its true class index and the predicted distribution.
struct WmcllRow {
  int true_class = 0;
  std::vector<double> probs;
};

/// Input to the weighted multi-class log loss. Class count M is the length
/// of class_weights; every row must carry M probabilities and a true_class
/// below M. Weights default to all ones.
struct WmcllInput {
  std::vector<WmcllRow> rows;
  std::vector<double> class_weights;

  static WmcllInput with_equal_weights(std::vector<WmcllRow> rows, std::size_t classes);
};

constexpr double kDefaultClampEps = 1e-15;

/// Weighted multi-class logarithmic loss:
///
///   loss = - sum_i w_i * (1/N_i) * sum_{j in class i} ln p_ij  /  sum_i w_i
///
/// where N_i is the number of rows whose true class is i and p_ij is the
/// predicted probability of class i for row j. Probabilities are clamped to
/// [clamp_eps, 1 - clamp_eps] before the logarithm.
double wmcll(const WmcllInput& input, double clamp_eps = kDefaultClampEps);

/// Smoothed target: t_k = (1 - epsilon) * [k == true_class] + epsilon / K.
std::vector<double> smooth_labels(int true_class, double epsilon, int classes);

/// WMCLL generalized to soft targets: the one-hot memberships y_ij become
/// t_ij and the class sizes N_i become soft counts sum_j t_ij. Reduces
/// bit-exactly to wmcll when targets are one-hot.
double smoothed_wmcll(const std::vector<std::vector<double>>& targets,
                      const std::vector<std::vector<double>>& probs,
                      std::span<const double> class_weights,
                      double clamp_eps = kDefaultClampEps);

/// Fraction of rows whose argmax probability matches the true class.
double accuracy(const WmcllInput& input);

}  // namespace clotkit
