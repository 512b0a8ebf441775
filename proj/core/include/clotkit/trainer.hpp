#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "clotkit/dataset.hpp"
#include "clotkit/rng.hpp"

namespace clotkit {

// ---------------------------------------------------------------------------
// Classifier head: logits = W3 * (W2 * dropout(W1 * x + b1) + b2) + b3.
// There are no nonlinear activations between the linear layers by default;
// `use_activation` inserts a rectifier after layers 1 and 2 when set.
// ---------------------------------------------------------------------------

struct HeadConfig {
  int in_dim = 0;
  int hidden1 = 128;
  int hidden2 = 64;
  int num_classes = 2;
  double dropout = 0.1;
  bool use_activation = false;
};

struct HeadParams {
  HeadConfig cfg;
  std::vector<double> w1, b1;  // w1: hidden1 x in_dim, row-major
  std::vector<double> w2, b2;  // w2: hidden2 x hidden1
  std::vector<double> w3, b3;  // w3: num_classes x hidden2

  /// Seeded uniform Kaiming-style init: weights ~ U(-1/sqrt(fan_in),
  /// +1/sqrt(fan_in)), biases zero. Each tensor draws from its own stream.
  static HeadParams init(const HeadConfig& cfg, std::uint64_t seed);

  /// Zero-filled parameters of the given shape.
  static HeadParams zeros(const HeadConfig& cfg);

  std::array<std::vector<double>*, 6> tensors();
  std::array<const std::vector<double>*, 6> tensors() const;
  std::size_t param_count() const;
};

/// Gradients with the same six-tensor layout as HeadParams.
struct HeadGrads {
  std::vector<double> w1, b1, w2, b2, w3, b3;

  static HeadGrads zeros(const HeadConfig& cfg);
  std::array<std::vector<double>*, 6> tensors();
  std::array<const std::vector<double>*, 6> tensors() const;
};

/// Intermediate activations kept for the backward pass.
struct ForwardCache {
  std::vector<double> x;       // input
  std::vector<double> z1;      // W1 x + b1 (pre-activation)
  std::vector<double> h1;      // after activation, dropout mask and scaling
  std::vector<double> z2;      // W2 h1 + b2 (pre-activation)
  std::vector<double> h2;      // after activation
  std::vector<double> logits;  // W3 h2 + b3
  std::vector<double> mask;    // per-unit dropout multiplier (1/keep or 0); empty in eval
};

/// Forward pass. Train mode when `dropout_rng` is non-null: each hidden1 unit
/// draws one uniform and is dropped when u < dropout (inverted scaling by
/// 1/(1-dropout) on kept units). Eval mode (null rng) is deterministic and
/// rng-free. Returns the logits; fills `cache` when non-null.
std::vector<double> head_forward(const HeadParams& params, const std::vector<double>& x,
                                 ForwardCache* cache = nullptr,
                                 CounterRng* dropout_rng = nullptr);

/// Accumulates (+=) exact analytic gradients of the per-sample loss
///   L = -sum_k target_k * ln softmax(logits)_k
/// into `grads`. `target` may be any non-negative coefficient vector (a
/// smoothed one-hot, or one pre-scaled by class weights / soft counts for a
/// batch objective); the logit gradient is (sum_k target_k) * p - target.
void head_backward(const HeadParams& params, const ForwardCache& cache,
                   const std::vector<double>& target, HeadGrads& grads);

// ---------------------------------------------------------------------------
// Adam with classic L2 weight decay folded into the gradient.
// ---------------------------------------------------------------------------

struct AdamState {
  std::array<std::vector<double>, 6> m;
  std::array<std::vector<double>, 6> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-6;

  static AdamState zeros(const HeadConfig& cfg);
};

/// One Adam update over every head tensor:
///   g   = grad + weight_decay * theta
///   m   = beta1 m + (1-beta1) g
///   v   = beta2 v + (1-beta2) g^2
///   theta -= lr * (m / (1-beta1^t)) / (sqrt(v / (1-beta2^t)) + eps)
/// Raises NonFiniteGradient when any gradient entry is not finite.
void adam_step(HeadParams& params, const HeadGrads& grads, AdamState& state, double lr);

/// The same update on a single flat tensor (t is the 1-based step count).
void adam_update(std::vector<double>& theta, const std::vector<double>& grad,
                 std::vector<double>& m, std::vector<double>& v, std::uint64_t t,
                 double lr, double beta1, double beta2, double eps, double weight_decay);

// ---------------------------------------------------------------------------
// ReduceLROnPlateau + early stopping + epoch cap, as one state machine.
// ---------------------------------------------------------------------------

enum class ScheduleDecision { Continue, ReduceLr, Stop, Checkpoint };

std::string_view schedule_decision_name(ScheduleDecision d) noexcept;
ScheduleDecision parse_schedule_decision(std::string_view name);

struct ScheduleState {
  double lr = 1e-4;
  double best_loss = 0;  // set to +inf by make_schedule_state
  int bad_epochs_sched = 0;
  int bad_epochs_stop = 0;
  int epoch = 0;
  int best_epoch = 0;
  double max_lr = 1e-4;
  double min_lr = 1e-5;
  double factor = 0.1;
  int patience = 1;
  int stop_patience = 6;
  int max_epochs = 30;
};

ScheduleState make_schedule_state(double max_lr = 1e-4, double min_lr = 1e-5,
                                  double factor = 0.1, int patience = 1,
                                  int stop_patience = 6, int max_epochs = 30);

/// Feeds one epoch's validation loss. Improvement is strict (<). On
/// improvement both bad counters reset and Checkpoint is emitted. Otherwise
/// both counters increment; when bad_epochs_sched exceeds patience the lr
/// drops to max(lr*factor, min_lr) and that counter resets (ReduceLr is
/// reported only when the lr actually moved). Stop fires when
/// bad_epochs_stop >= stop_patience or the epoch counter reaches max_epochs,
/// and takes priority over every other decision.
ScheduleDecision schedule_step(ScheduleState& state, double val_loss);

// ---------------------------------------------------------------------------
// Embeddings and the cross-validated training loop.
// ---------------------------------------------------------------------------

/// One subject's precomputed backbone embedding. label is a class index, or
/// -1 while unlabeled (attach labels before training).
struct EmbeddingRow {
  std::string subject_id;
  int label = -1;
  std::vector<double> features;
};

struct EmbeddingSet {
  int dim = 0;
  std::vector<EmbeddingRow> rows;
};

/// CSV with header subject_id,e0,...,e{D-1}. Labels are not stored here;
/// they come from metadata or pseudo-label files.
EmbeddingSet load_embeddings_csv(const std::string& path);
void write_embeddings_csv(const std::string& path, const EmbeddingSet& set);

/// Sets row.label for every subject present in `labels`; unknown subjects in
/// `labels` are ignored. Returns the number of rows labeled.
std::size_t attach_labels(EmbeddingSet& set, const std::map<std::string, int>& labels);

struct TrainConfig {
  HeadConfig head;                    // head.in_dim 0 = take from the data
  std::uint64_t seed = 0;
  int batch_size = 32;
  double label_smoothing = 0.01;
  std::vector<double> class_weights;  // empty = equal weights
  double max_lr = 1e-4;
  double min_lr = 1e-5;
  double lr_factor = 0.1;
  int patience = 1;
  int stop_patience = 6;
  int max_epochs = 30;
  double weight_decay = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct EpochRecord {
  int epoch = 0;        // 1-based
  double train_loss = 0;
  double val_loss = 0;
  double lr = 0;        // lr used during this epoch
  ScheduleDecision decision = ScheduleDecision::Continue;
};

struct FoldResult {
  int fold = 0;
  HeadParams best;
  double best_val_loss = 0;
  int best_epoch = 0;
  std::vector<EpochRecord> history;
};

/// Trains one fold: subjects assigned to `val_fold` validate, all other
/// subjects train. Subjects absent from `folds` are pseudo-labeled extras and
/// always train, never validate. Every participating row needs label >= 0.
/// Validation loss is the unsmoothed WMCLL of eval-mode predictions.
FoldResult train_fold(const EmbeddingSet& data, const FoldAssignment& folds, int val_fold,
                      const TrainConfig& cfg);

/// Runs train_fold for every fold 0..k-1.
std::vector<FoldResult> train_head(const EmbeddingSet& data, const FoldAssignment& folds,
                                   const TrainConfig& cfg);

/// Eval-mode class probabilities for one embedding vector.
std::vector<double> predict_probs(const HeadParams& params, const std::vector<double>& x);

/// Little-endian binary with magic header and shape table; round-trips exactly.
void save_head(const HeadParams& params, const std::string& path);
HeadParams load_head(const std::string& path);

/// CSV: epoch,train_loss,val_loss,lr,decision.
void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history);
std::vector<EpochRecord> read_history_csv(const std::string& path);

}  // namespace clotkit
