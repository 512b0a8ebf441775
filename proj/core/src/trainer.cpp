#include "clotkit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "clotkit/csv.hpp"
#include "clotkit/errors.hpp"
#include "clotkit/metrics.hpp"

namespace clotkit {

namespace {

void check_head_config(const HeadConfig& cfg) {
  if (cfg.in_dim <= 0 || cfg.hidden1 <= 0 || cfg.hidden2 <= 0 || cfg.num_classes < 2) {
    raise(Errc::InvalidParams, "head dimensions must be positive (>=2 classes)");
  }
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
    raise(Errc::InvalidParams, "dropout must lie in [0, 1)");
  }
}

/// y = W x + b with W row-major out x in.
void linear(const std::vector<double>& w, const std::vector<double>& b,
            const std::vector<double>& x, std::vector<double>& y) {
  const std::size_t out = b.size();
  const std::size_t in = x.size();
  y.resize(out);
  for (std::size_t o = 0; o < out; ++o) {
    double acc = b[o];
    const double* row = w.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

/// grads_w += dz (outer) x ; grads_b += dz ; dx = W^T dz.
void linear_backward(const std::vector<double>& w, const std::vector<double>& x,
                     const std::vector<double>& dz, std::vector<double>& gw,
                     std::vector<double>& gb, std::vector<double>* dx) {
  const std::size_t out = dz.size();
  const std::size_t in = x.size();
  if (dx) dx->assign(in, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    const double d = dz[o];
    gb[o] += d;
    double* grow = gw.data() + o * in;
    const double* wrow = w.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) {
      grow[i] += d * x[i];
      if (dx) (*dx)[i] += wrow[i] * d;
    }
  }
}

void relu_inplace(std::vector<double>& v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

std::uint64_t fold_seed(std::uint64_t run_seed, int fold) {
  return mix64(run_seed) ^ mix64(static_cast<std::uint64_t>(fold) + 1);
}

void put_u32(std::ofstream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ofstream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::ifstream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

constexpr char kHeadMagic[8] = {'C', 'K', 'H', 'E', 'A', 'D', '0', '1'};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double_field(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    raise(Errc::InvalidParams, std::string("bad numeric field for ") + what + ": '" + s + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// HeadParams / HeadGrads
// ---------------------------------------------------------------------------

HeadParams HeadParams::init(const HeadConfig& cfg, std::uint64_t seed) {
  check_head_config(cfg);
  HeadParams p = zeros(cfg);
  const struct {
    std::vector<double>* w;
    int fan_in;
  } layers[] = {{&p.w1, cfg.in_dim}, {&p.w2, cfg.hidden1}, {&p.w3, cfg.hidden2}};
  std::uint64_t stream = 0;
  for (const auto& layer : layers) {
    CounterRng rng(seed, ++stream);
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.fan_in));
    for (double& w : *layer.w) w = rng.uniform(-bound, bound);
  }
  return p;
}

HeadParams HeadParams::zeros(const HeadConfig& cfg) {
  check_head_config(cfg);
  HeadParams p;
  p.cfg = cfg;
  p.w1.assign(static_cast<std::size_t>(cfg.hidden1) * cfg.in_dim, 0.0);
  p.b1.assign(cfg.hidden1, 0.0);
  p.w2.assign(static_cast<std::size_t>(cfg.hidden2) * cfg.hidden1, 0.0);
  p.b2.assign(cfg.hidden2, 0.0);
  p.w3.assign(static_cast<std::size_t>(cfg.num_classes) * cfg.hidden2, 0.0);
  p.b3.assign(cfg.num_classes, 0.0);
  return p;
}

std::array<std::vector<double>*, 6> HeadParams::tensors() {
  return {&w1, &b1, &w2, &b2, &w3, &b3};
}

std::array<const std::vector<double>*, 6> HeadParams::tensors() const {
  return {&w1, &b1, &w2, &b2, &w3, &b3};
}

std::size_t HeadParams::param_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += t->size();
  return n;
}

HeadGrads HeadGrads::zeros(const HeadConfig& cfg) {
  HeadParams p = HeadParams::zeros(cfg);
  HeadGrads g;
  g.w1 = std::move(p.w1);
  g.b1 = std::move(p.b1);
  g.w2 = std::move(p.w2);
  g.b2 = std::move(p.b2);
  g.w3 = std::move(p.w3);
  g.b3 = std::move(p.b3);
  return g;
}

std::array<std::vector<double>*, 6> HeadGrads::tensors() {
  return {&w1, &b1, &w2, &b2, &w3, &b3};
}

std::array<const std::vector<double>*, 6> HeadGrads::tensors() const {
  return {&w1, &b1, &w2, &b2, &w3, &b3};
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

std::vector<double> head_forward(const HeadParams& params, const std::vector<double>& x,
                                 ForwardCache* cache, CounterRng* dropout_rng) {
  const HeadConfig& cfg = params.cfg;
  check_head_config(cfg);
  if (static_cast<int>(x.size()) != cfg.in_dim) {
    raise(Errc::ShapeMismatch, "embedding dim " + std::to_string(x.size()) +
                                   " != head in_dim " + std::to_string(cfg.in_dim));
  }
  for (double v : x) {
    if (!std::isfinite(v)) raise(Errc::NonFiniteInput, "non-finite embedding entry");
  }

  std::vector<double> z1, h1, z2, h2, logits, mask;
  linear(params.w1, params.b1, x, z1);
  h1 = z1;
  if (cfg.use_activation) relu_inplace(h1);
  if (dropout_rng != nullptr) {
    const double keep = 1.0 - cfg.dropout;
    mask.resize(h1.size());
    for (std::size_t i = 0; i < h1.size(); ++i) {
      const bool kept = dropout_rng->next_double() >= cfg.dropout;
      mask[i] = kept ? 1.0 / keep : 0.0;
      h1[i] *= mask[i];
    }
  }
  linear(params.w2, params.b2, h1, z2);
  h2 = z2;
  if (cfg.use_activation) relu_inplace(h2);
  linear(params.w3, params.b3, h2, logits);

  if (cache != nullptr) {
    cache->x = x;
    cache->z1 = std::move(z1);
    cache->h1 = std::move(h1);
    cache->z2 = std::move(z2);
    cache->h2 = std::move(h2);
    cache->logits = logits;
    cache->mask = std::move(mask);
  }
  return logits;
}

void head_backward(const HeadParams& params, const ForwardCache& cache,
                   const std::vector<double>& target, HeadGrads& grads) {
  const HeadConfig& cfg = params.cfg;
  if (target.size() != cache.logits.size() ||
      static_cast<int>(target.size()) != cfg.num_classes) {
    raise(Errc::ShapeMismatch, "target length does not match logits");
  }
  const std::vector<double> p = softmax(cache.logits);
  double tsum = 0.0;
  for (double t : target) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
      raise(Errc::InvalidParams, "target coefficients must be finite and >= 0");
    }
    tsum += t;
  }

  // dL/dz3 for L = -sum_k target_k ln p_k.
  std::vector<double> dz3(target.size());
  for (std::size_t k = 0; k < target.size(); ++k) dz3[k] = tsum * p[k] - target[k];

  std::vector<double> dh2, dh1, dx_unused;
  linear_backward(params.w3, cache.h2, dz3, grads.w3, grads.b3, &dh2);
  if (cfg.use_activation) {
    for (std::size_t i = 0; i < dh2.size(); ++i) {
      if (cache.z2[i] <= 0.0) dh2[i] = 0.0;
    }
  }
  linear_backward(params.w2, cache.h1, dh2, grads.w2, grads.b2, &dh1);
  if (!cache.mask.empty()) {
    for (std::size_t i = 0; i < dh1.size(); ++i) dh1[i] *= cache.mask[i];
  }
  if (cfg.use_activation) {
    for (std::size_t i = 0; i < dh1.size(); ++i) {
      if (cache.z1[i] <= 0.0) dh1[i] = 0.0;
    }
  }
  linear_backward(params.w1, cache.x, dh1, grads.w1, grads.b1, nullptr);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

AdamState AdamState::zeros(const HeadConfig& cfg) {
  AdamState s;
  HeadParams p = HeadParams::zeros(cfg);
  auto src = p.tensors();
  for (int i = 0; i < 6; ++i) {
    s.m[i].assign(src[i]->size(), 0.0);
    s.v[i].assign(src[i]->size(), 0.0);
  }
  return s;
}

void adam_update(std::vector<double>& theta, const std::vector<double>& grad,
                 std::vector<double>& m, std::vector<double>& v, std::uint64_t t,
                 double lr, double beta1, double beta2, double eps, double weight_decay) {
  if (theta.size() != grad.size() || theta.size() != m.size() || theta.size() != v.size()) {
    raise(Errc::ShapeMismatch, "adam tensor shapes disagree");
  }
  if (t == 0) raise(Errc::InvalidParams, "adam step count must be >= 1");
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!std::isfinite(grad[i])) raise(Errc::NonFiniteGradient, "non-finite gradient entry");
    const double g = grad[i] + weight_decay * theta[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    theta[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void adam_step(HeadParams& params, const HeadGrads& grads, AdamState& state, double lr) {
  auto th = params.tensors();
  auto gr = grads.tensors();
  state.t += 1;
  for (int i = 0; i < 6; ++i) {
    adam_update(*th[i], *gr[i], state.m[i], state.v[i], state.t, lr, state.beta1,
                state.beta2, state.eps, state.weight_decay);
  }
}

// ---------------------------------------------------------------------------
// Scheduler
// ---------------------------------------------------------------------------

std::string_view schedule_decision_name(ScheduleDecision d) noexcept {
  switch (d) {
    case ScheduleDecision::Continue: return "Continue";
    case ScheduleDecision::ReduceLr: return "ReduceLr";
    case ScheduleDecision::Stop: return "Stop";
    case ScheduleDecision::Checkpoint: return "Checkpoint";
  }
  return "?";
}

ScheduleDecision parse_schedule_decision(std::string_view name) {
  if (name == "Continue") return ScheduleDecision::Continue;
  if (name == "ReduceLr") return ScheduleDecision::ReduceLr;
  if (name == "Stop") return ScheduleDecision::Stop;
  if (name == "Checkpoint") return ScheduleDecision::Checkpoint;
  raise(Errc::InvalidParams, "unknown schedule decision '" + std::string(name) + "'");
}

ScheduleState make_schedule_state(double max_lr, double min_lr, double factor, int patience,
                                  int stop_patience, int max_epochs) {
  if (!(max_lr > 0.0) || !(min_lr > 0.0) || min_lr > max_lr) {
    raise(Errc::InvalidParams, "need 0 < min_lr <= max_lr");
  }
  if (!(factor > 0.0 && factor < 1.0)) raise(Errc::InvalidParams, "factor must be in (0, 1)");
  if (patience < 0 || stop_patience < 1 || max_epochs < 1) {
    raise(Errc::InvalidParams, "scheduler counters out of range");
  }
  ScheduleState s;
  s.lr = max_lr;
  s.best_loss = std::numeric_limits<double>::infinity();
  s.max_lr = max_lr;
  s.min_lr = min_lr;
  s.factor = factor;
  s.patience = patience;
  s.stop_patience = stop_patience;
  s.max_epochs = max_epochs;
  return s;
}

ScheduleDecision schedule_step(ScheduleState& state, double val_loss) {
  if (!std::isfinite(val_loss)) raise(Errc::NonFiniteInput, "validation loss not finite");
  state.epoch += 1;
  const bool improved = val_loss < state.best_loss;
  bool reduced = false;
  if (improved) {
    state.best_loss = val_loss;
    state.best_epoch = state.epoch;
    state.bad_epochs_sched = 0;
    state.bad_epochs_stop = 0;
  } else {
    state.bad_epochs_sched += 1;
    state.bad_epochs_stop += 1;
    if (state.bad_epochs_stop < state.stop_patience &&
        state.bad_epochs_sched > state.patience) {
      const double next = std::max(state.lr * state.factor, state.min_lr);
      reduced = next < state.lr;
      state.lr = next;
      state.bad_epochs_sched = 0;
    }
  }
  if (state.epoch >= state.max_epochs) return ScheduleDecision::Stop;
  if (!improved && state.bad_epochs_stop >= state.stop_patience) return ScheduleDecision::Stop;
  if (reduced) return ScheduleDecision::ReduceLr;
  return improved ? ScheduleDecision::Checkpoint : ScheduleDecision::Continue;
}

// ---------------------------------------------------------------------------
// Embedding files
// ---------------------------------------------------------------------------

EmbeddingSet load_embeddings_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header[0] != "subject_id") {
    raise(Errc::MissingColumn, "embeddings CSV must start with a subject_id column");
  }
  const int dim = static_cast<int>(table.header.size()) - 1;
  if (dim < 1) raise(Errc::MissingColumn, "embeddings CSV carries no feature columns");

  EmbeddingSet set;
  set.dim = dim;
  std::map<std::string, int> seen;
  for (const auto& row : table.rows) {
    if (static_cast<int>(row.size()) != dim + 1) {
      raise(Errc::ShapeMismatch, "embedding row width differs from header");
    }
    EmbeddingRow rec;
    rec.subject_id = row[0];
    if (rec.subject_id.empty()) raise(Errc::InvalidParams, "empty subject_id");
    if (!seen.emplace(rec.subject_id, 1).second) {
      raise(Errc::SubjectCollision, "duplicate embedding for subject '" + rec.subject_id + "'");
    }
    rec.features.reserve(dim);
    for (int i = 0; i < dim; ++i) {
      const double v = parse_double_field(row[i + 1], "embedding");
      if (!std::isfinite(v)) raise(Errc::NonFiniteInput, "non-finite embedding value");
      rec.features.push_back(v);
    }
    set.rows.push_back(std::move(rec));
  }
  return set;
}

void write_embeddings_csv(const std::string& path, const EmbeddingSet& set) {
  CsvTable table;
  table.header.push_back("subject_id");
  for (int i = 0; i < set.dim; ++i) table.header.push_back("e" + std::to_string(i));
  for (const auto& row : set.rows) {
    std::vector<std::string> out;
    out.push_back(row.subject_id);
    for (double v : row.features) out.push_back(fmt_double(v));
    table.rows.push_back(std::move(out));
  }
  write_csv(path, table);
}

std::size_t attach_labels(EmbeddingSet& set, const std::map<std::string, int>& labels) {
  std::size_t n = 0;
  for (auto& row : set.rows) {
    auto it = labels.find(row.subject_id);
    if (it != labels.end()) {
      row.label = it->second;
      ++n;
    }
  }
  return n;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

/// Draw-order contract per epoch: one stream seeded (fold_seed, epoch) first
/// serves the Fisher-Yates shuffle of the training rows, then the dropout
/// masks in shuffled batch order. Identical configs replay identical streams.
constexpr std::uint64_t kEpochStreamTag = 0x45504f4348ULL;

std::vector<double> class_weights_or_equal(const TrainConfig& cfg, int classes) {
  std::vector<double> w = cfg.class_weights;
  if (w.empty()) w.assign(classes, 1.0);
  if (static_cast<int>(w.size()) != classes) {
    raise(Errc::ShapeMismatch, "class_weights length != num_classes");
  }
  for (double x : w) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      raise(Errc::InvalidParams, "class weights must be positive");
    }
  }
  return w;
}

}  // namespace

FoldResult train_fold(const EmbeddingSet& data, const FoldAssignment& folds, int val_fold,
                      const TrainConfig& cfg) {
  if (data.rows.empty()) raise(Errc::EmptyIndex, "no embeddings to train on");
  if (folds.k < 2) raise(Errc::InvalidParams, "fold assignment must have k >= 2");
  if (val_fold < 0 || val_fold >= folds.k) raise(Errc::InvalidParams, "fold out of range");
  if (cfg.batch_size < 1) raise(Errc::InvalidParams, "batch_size must be >= 1");
  if (!(cfg.label_smoothing >= 0.0 && cfg.label_smoothing < 1.0)) {
    raise(Errc::InvalidParams, "label_smoothing must lie in [0, 1)");
  }

  HeadConfig hc = cfg.head;
  if (hc.in_dim == 0) hc.in_dim = data.dim;
  if (hc.in_dim != data.dim) {
    raise(Errc::ShapeMismatch, "head in_dim != embedding dim");
  }
  const int K = hc.num_classes;
  const std::vector<double> weights = class_weights_or_equal(cfg, K);
  double weight_sum = 0.0;
  for (double w : weights) weight_sum += w;

  std::vector<int> train_idx, val_idx;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const EmbeddingRow& row = data.rows[i];
    if (row.label < 0 || row.label >= K) {
      raise(Errc::InvalidParams,
            "subject '" + row.subject_id + "' lacks a class label in [0, K)");
    }
    auto it = folds.fold_of_patient.find(row.subject_id);
    const bool in_val = it != folds.fold_of_patient.end() && it->second == val_fold;
    (in_val ? val_idx : train_idx).push_back(static_cast<int>(i));
  }
  if (train_idx.empty() || val_idx.empty()) {
    raise(Errc::EmptyIndex, "fold " + std::to_string(val_fold) +
                                " leaves an empty train or validation split");
  }

  const std::uint64_t seed = fold_seed(cfg.seed, val_fold);
  HeadParams params = HeadParams::init(hc, seed);
  AdamState adam = AdamState::zeros(hc);
  adam.beta1 = cfg.beta1;
  adam.beta2 = cfg.beta2;
  adam.eps = cfg.adam_eps;
  adam.weight_decay = cfg.weight_decay;
  ScheduleState sched = make_schedule_state(cfg.max_lr, cfg.min_lr, cfg.lr_factor,
                                            cfg.patience, cfg.stop_patience, cfg.max_epochs);

  FoldResult result;
  result.fold = val_fold;
  result.best = params;
  result.best_val_loss = std::numeric_limits<double>::infinity();

  HeadGrads grads = HeadGrads::zeros(hc);
  std::vector<int> order(train_idx);
  std::vector<ForwardCache> caches;
  std::vector<std::vector<double>> batch_targets, batch_probs;

  for (int epoch = 1;; ++epoch) {
    CounterRng epoch_rng(seed, kEpochStreamTag + static_cast<std::uint64_t>(epoch));
    order = train_idx;
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[epoch_rng.next_below(static_cast<std::uint32_t>(i + 1))]);
    }

    const double lr_used = sched.lr;
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t n = std::min<std::size_t>(cfg.batch_size, order.size() - begin);
      caches.assign(n, {});
      batch_targets.assign(n, {});
      batch_probs.assign(n, {});
      std::vector<double> soft_count(K, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const EmbeddingRow& row = data.rows[order[begin + j]];
        head_forward(params, row.features, &caches[j], &epoch_rng);
        batch_probs[j] = softmax(caches[j].logits);
        batch_targets[j] = smooth_labels(row.label, cfg.label_smoothing, K);
        for (int k = 0; k < K; ++k) soft_count[k] += batch_targets[j][k];
      }
      loss_sum += smoothed_wmcll(batch_targets, batch_probs, weights) * static_cast<double>(n);

      // Per-sample backward coefficients alpha_jk = (w_k / sum w) t_jk / N_k
      // make the accumulated gradients exactly those of the batch loss.
      for (auto* g : grads.tensors()) std::fill(g->begin(), g->end(), 0.0);
      std::vector<double> alpha(K);
      for (std::size_t j = 0; j < n; ++j) {
        for (int k = 0; k < K; ++k) {
          alpha[k] = weights[k] / weight_sum * batch_targets[j][k] / soft_count[k];
        }
        head_backward(params, caches[j], alpha, grads);
      }
      adam_step(params, grads, adam, lr_used);
    }
    const double train_loss = loss_sum / static_cast<double>(order.size());

    WmcllInput val;
    val.class_weights = weights;
    val.rows.reserve(val_idx.size());
    for (int i : val_idx) {
      val.rows.push_back({data.rows[i].label, predict_probs(params, data.rows[i].features)});
    }
    const double val_loss = wmcll(val);

    const bool improved = val_loss < sched.best_loss;
    const ScheduleDecision decision = schedule_step(sched, val_loss);
    if (improved) {
      result.best = params;
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
    }
    result.history.push_back({epoch, train_loss, val_loss, lr_used, decision});
    if (decision == ScheduleDecision::Stop) break;
  }
  return result;
}

std::vector<FoldResult> train_head(const EmbeddingSet& data, const FoldAssignment& folds,
                                   const TrainConfig& cfg) {
  std::vector<FoldResult> results;
  results.reserve(folds.k);
  for (int f = 0; f < folds.k; ++f) results.push_back(train_fold(data, folds, f, cfg));
  return results;
}

std::vector<double> predict_probs(const HeadParams& params, const std::vector<double>& x) {
  return softmax(head_forward(params, x));
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void save_head(const HeadParams& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) raise(Errc::IoError, "cannot open '" + path + "' for writing");
  os.write(kHeadMagic, sizeof kHeadMagic);
  put_u32(os, static_cast<std::uint32_t>(params.cfg.in_dim));
  put_u32(os, static_cast<std::uint32_t>(params.cfg.hidden1));
  put_u32(os, static_cast<std::uint32_t>(params.cfg.hidden2));
  put_u32(os, static_cast<std::uint32_t>(params.cfg.num_classes));
  put_u32(os, params.cfg.use_activation ? 1u : 0u);
  put_f64(os, params.cfg.dropout);
  for (const auto* t : params.tensors()) {
    for (double v : *t) put_f64(os, v);
  }
  if (!os) raise(Errc::IoError, "short write to '" + path + "'");
}

HeadParams load_head(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(Errc::IoError, "cannot open '" + path + "'");
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kHeadMagic, 8) != 0) {
    raise(Errc::CorruptFile, "'" + path + "' is not a head weights file");
  }
  HeadConfig cfg;
  cfg.in_dim = static_cast<int>(get_u32(is));
  cfg.hidden1 = static_cast<int>(get_u32(is));
  cfg.hidden2 = static_cast<int>(get_u32(is));
  cfg.num_classes = static_cast<int>(get_u32(is));
  cfg.use_activation = get_u32(is) != 0;
  cfg.dropout = get_f64(is);
  if (!is) raise(Errc::CorruptFile, "truncated head header in '" + path + "'");
  if (cfg.in_dim <= 0 || cfg.hidden1 <= 0 || cfg.hidden2 <= 0 || cfg.num_classes < 2 ||
      !(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
    raise(Errc::CorruptFile, "invalid head shape table in '" + path + "'");
  }
  HeadParams p = HeadParams::zeros(cfg);
  for (auto* t : p.tensors()) {
    for (double& v : *t) v = get_f64(is);
  }
  if (!is) raise(Errc::CorruptFile, "truncated head tensors in '" + path + "'");
  is.peek();
  if (!is.eof()) raise(Errc::CorruptFile, "trailing bytes in '" + path + "'");
  return p;
}

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
  CsvTable table;
  table.header = {"epoch", "train_loss", "val_loss", "lr", "decision"};
  for (const auto& rec : history) {
    table.rows.push_back({std::to_string(rec.epoch), fmt_double(rec.train_loss),
                          fmt_double(rec.val_loss), fmt_double(rec.lr),
                          std::string(schedule_decision_name(rec.decision))});
  }
  write_csv(path, table);
}

std::vector<EpochRecord> read_history_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const int c_epoch = table.column("epoch");
  const int c_train = table.column("train_loss");
  const int c_val = table.column("val_loss");
  const int c_lr = table.column("lr");
  const int c_dec = table.column("decision");
  if (c_epoch < 0 || c_train < 0 || c_val < 0 || c_lr < 0 || c_dec < 0) {
    raise(Errc::MissingColumn, "history CSV missing a required column");
  }
  std::vector<EpochRecord> out;
  for (const auto& row : table.rows) {
    EpochRecord rec;
    rec.epoch = static_cast<int>(parse_double_field(row[c_epoch], "epoch"));
    rec.train_loss = parse_double_field(row[c_train], "train_loss");
    rec.val_loss = parse_double_field(row[c_val], "val_loss");
    rec.lr = parse_double_field(row[c_lr], "lr");
    rec.decision = parse_schedule_decision(row[c_dec]);
    out.push_back(rec);
  }
  return out;
}

}  // namespace clotkit
