#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "clotkit/dataset.hpp"
#include "clotkit/trainer.hpp"

namespace clotkit {

/// Per-subject class probabilities from one model.
struct PredictionRow {
  std::string subject_id;
  std::vector<double> probs;
};

struct PredictionTable {
  std::string model_id;
  std::vector<std::string> class_names{"CE", "LAA"};
  std::vector<PredictionRow> rows;
};

/// Checks unique subjects and that every row is a probability vector of the
/// right width; raises on violation.
void validate_predictions(const PredictionTable& table, double tol = 1e-5);

/// Eval-mode predictions for every row of an embedding set.
PredictionTable predict_table(const HeadParams& params, const EmbeddingSet& set,
                              std::string model_id = {});

struct PseudoLabelRow {
  std::string subject_id;
  int label = 0;  // class index into the prediction table's class_names
  double confidence = 0.0;
};

struct PseudoLabelBatch {
  double threshold = 0.9;
  std::vector<PseudoLabelRow> rows;
};

/// Keeps rows whose best class probability is >= threshold (inclusive);
/// assigned label is the argmax. threshold must lie in (0.5, 1].
PseudoLabelBatch select_pseudo_labels(const PredictionTable& preds, double threshold);

/// One fold's training/validation subject lists after pseudo expansion.
struct FoldManifest {
  int fold = 0;
  std::vector<std::string> train_subjects;
  std::vector<std::string> val_subjects;
};

/// Every fold's training manifest gains all pseudo subjects; validation
/// manifests are exactly the original fold members. A pseudo subject that
/// already has a fold assignment raises SubjectCollision.
std::vector<FoldManifest> expand_train_folds(const FoldAssignment& folds,
                                             const PseudoLabelBatch& batch);

/// Appends pool rows selected by the batch to `train`, carrying the pseudo
/// label. Raises SubjectCollision when a subject already sits in `train`.
/// Returns the number of rows appended.
std::size_t merge_pseudo_rows(EmbeddingSet& train, const EmbeddingSet& pool,
                              const PseudoLabelBatch& batch);

/// Per-subject arithmetic mean of class probabilities across tables. All
/// tables must cover the same subject set (SubjectSetMismatch otherwise) with
/// the same class names.
PredictionTable ensemble_mean(const std::vector<PredictionTable>& tables);

/// Submission CSV: header patient_id,CE,LAA; 9-decimal probabilities; rows
/// sorted by subject id.
void write_submission(const PredictionTable& table, const std::filesystem::path& path);
PredictionTable load_submission(const std::filesystem::path& path);

/// Model prediction CSV: header subject_id,CE,LAA; full-precision values
/// (exact round-trip). The loader also accepts patient_id as the id column,
/// so submission files round-trip into pseudo-label selection.
void write_predictions_csv(const PredictionTable& table, const std::filesystem::path& path);
PredictionTable load_predictions_csv(const std::filesystem::path& path);

/// Pseudo-label CSV: header subject_id,label,confidence.
void write_pseudo_csv(const PseudoLabelBatch& batch, const std::filesystem::path& path);
PseudoLabelBatch load_pseudo_csv(const std::filesystem::path& path);

}  // namespace clotkit
