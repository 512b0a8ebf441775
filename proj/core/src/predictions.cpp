#include "clotkit/predictions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "clotkit/csv.hpp"
#include "clotkit/errors.hpp"
#include "clotkit/metrics.hpp"

namespace clotkit {

namespace {

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_fixed9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

double parse_prob(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    raise(Errc::InvalidParams, "bad probability value '" + s + "'");
  }
}

/// Shared reader for prediction-shaped CSVs (id column + class columns).
PredictionTable load_prob_csv(const std::filesystem::path& path, const char* id_column,
                              const char* id_alias = nullptr) {
  const CsvTable table = read_csv(path);
  const bool id_ok = !table.header.empty() &&
                     (table.header[0] == id_column ||
                      (id_alias != nullptr && table.header[0] == id_alias));
  if (!id_ok) {
    std::string want = id_column;
    if (id_alias != nullptr) want += std::string(" (or ") + id_alias + ")";
    raise(Errc::MissingColumn, path.string() + ": first column must be " + want);
  }
  if (table.header.size() < 3) {
    raise(Errc::MissingColumn, path.string() + ": expected at least two class columns");
  }
  PredictionTable out;
  out.class_names.assign(table.header.begin() + 1, table.header.end());
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      raise(Errc::ShapeMismatch, path.string() + ": row width differs from header");
    }
    PredictionRow rec;
    rec.subject_id = row[0];
    for (std::size_t i = 1; i < row.size(); ++i) rec.probs.push_back(parse_prob(row[i]));
    out.rows.push_back(std::move(rec));
  }
  validate_predictions(out);
  return out;
}

void write_prob_csv(const PredictionTable& table, const std::filesystem::path& path,
                    const char* id_column, std::string (*fmt)(double), bool sorted) {
  validate_predictions(table);
  CsvTable out;
  out.header.push_back(id_column);
  for (const auto& name : table.class_names) out.header.push_back(name);
  std::vector<const PredictionRow*> rows;
  rows.reserve(table.rows.size());
  for (const auto& row : table.rows) rows.push_back(&row);
  if (sorted) {
    std::sort(rows.begin(), rows.end(), [](const PredictionRow* a, const PredictionRow* b) {
      return a->subject_id < b->subject_id;
    });
  }
  for (const PredictionRow* row : rows) {
    std::vector<std::string> fields;
    fields.push_back(row->subject_id);
    for (double p : row->probs) fields.push_back(fmt(p));
    out.rows.push_back(std::move(fields));
  }
  write_csv(path, out);
}

}  // namespace

void validate_predictions(const PredictionTable& table, double tol) {
  if (table.class_names.size() < 2) {
    raise(Errc::InvalidParams, "prediction table needs at least two classes");
  }
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    if (row.subject_id.empty()) raise(Errc::InvalidParams, "empty subject_id");
    if (!seen.insert(row.subject_id).second) {
      raise(Errc::SubjectCollision, "duplicate prediction row for '" + row.subject_id + "'");
    }
    if (row.probs.size() != table.class_names.size()) {
      raise(Errc::ShapeMismatch, "prediction row width != class count");
    }
    if (!is_prob_vector(row.probs, tol)) {
      raise(Errc::InvalidParams,
            "probabilities for '" + row.subject_id + "' are not a distribution");
    }
  }
}

PredictionTable predict_table(const HeadParams& params, const EmbeddingSet& set,
                              std::string model_id) {
  PredictionTable out;
  out.model_id = std::move(model_id);
  if (params.cfg.num_classes != 2) {
    out.class_names.clear();
    for (int k = 0; k < params.cfg.num_classes; ++k) {
      out.class_names.push_back("class" + std::to_string(k));
    }
  }
  out.rows.reserve(set.rows.size());
  for (const auto& row : set.rows) {
    out.rows.push_back({row.subject_id, predict_probs(params, row.features)});
  }
  validate_predictions(out);
  return out;
}

PseudoLabelBatch select_pseudo_labels(const PredictionTable& preds, double threshold) {
  if (!(threshold > 0.5 && threshold <= 1.0)) {
    raise(Errc::InvalidParams, "pseudo-label threshold must lie in (0.5, 1]");
  }
  validate_predictions(preds);
  PseudoLabelBatch batch;
  batch.threshold = threshold;
  for (const auto& row : preds.rows) {
    const auto best = std::max_element(row.probs.begin(), row.probs.end());
    if (*best >= threshold) {
      batch.rows.push_back({row.subject_id,
                            static_cast<int>(best - row.probs.begin()), *best});
    }
  }
  return batch;
}

std::vector<FoldManifest> expand_train_folds(const FoldAssignment& folds,
                                             const PseudoLabelBatch& batch) {
  if (folds.k < 2) raise(Errc::InvalidParams, "fold assignment must have k >= 2");
  for (const auto& row : batch.rows) {
    if (folds.contains(row.subject_id)) {
      raise(Errc::SubjectCollision,
            "pseudo subject '" + row.subject_id + "' already holds a fold assignment");
    }
  }
  std::vector<FoldManifest> manifests(folds.k);
  for (int f = 0; f < folds.k; ++f) manifests[f].fold = f;
  for (const auto& [patient, fold] : folds.fold_of_patient) {
    for (int f = 0; f < folds.k; ++f) {
      (fold == f ? manifests[f].val_subjects : manifests[f].train_subjects).push_back(patient);
    }
  }
  for (auto& manifest : manifests) {
    for (const auto& row : batch.rows) manifest.train_subjects.push_back(row.subject_id);
  }
  return manifests;
}

std::size_t merge_pseudo_rows(EmbeddingSet& train, const EmbeddingSet& pool,
                              const PseudoLabelBatch& batch) {
  std::map<std::string, const EmbeddingRow*> by_id;
  for (const auto& row : pool.rows) by_id.emplace(row.subject_id, &row);
  std::set<std::string> existing;
  for (const auto& row : train.rows) existing.insert(row.subject_id);

  std::size_t added = 0;
  for (const auto& sel : batch.rows) {
    auto it = by_id.find(sel.subject_id);
    if (it == by_id.end()) {
      raise(Errc::SubjectSetMismatch,
            "pseudo subject '" + sel.subject_id + "' is missing from the embedding pool");
    }
    if (!existing.insert(sel.subject_id).second) {
      raise(Errc::SubjectCollision,
            "pseudo subject '" + sel.subject_id + "' already sits in the training set");
    }
    if (train.dim != 0 && pool.dim != train.dim) {
      raise(Errc::ShapeMismatch, "pool embedding dim differs from training dim");
    }
    EmbeddingRow row = *it->second;
    row.label = sel.label;
    train.rows.push_back(std::move(row));
    ++added;
  }
  if (train.dim == 0) train.dim = pool.dim;
  return added;
}

PredictionTable ensemble_mean(const std::vector<PredictionTable>& tables) {
  if (tables.empty()) raise(Errc::EmptyIndex, "no prediction tables to ensemble");
  for (const auto& table : tables) validate_predictions(table);
  const PredictionTable& first = tables.front();
  for (const auto& table : tables) {
    if (table.class_names != first.class_names) {
      raise(Errc::ShapeMismatch, "prediction tables disagree on class names");
    }
    if (table.rows.size() != first.rows.size()) {
      raise(Errc::SubjectSetMismatch, "prediction tables cover different subject counts");
    }
  }

  std::vector<std::map<std::string, const PredictionRow*>> index(tables.size());
  for (std::size_t t = 1; t < tables.size(); ++t) {
    for (const auto& row : tables[t].rows) index[t].emplace(row.subject_id, &row);
  }

  PredictionTable out;
  out.model_id = "ensemble";
  out.class_names = first.class_names;
  const double n = static_cast<double>(tables.size());
  for (const auto& row : first.rows) {
    PredictionRow mean;
    mean.subject_id = row.subject_id;
    mean.probs.assign(row.probs.size(), 0.0);
    for (std::size_t t = 0; t < tables.size(); ++t) {
      const PredictionRow* src = &row;
      if (t > 0) {
        auto it = index[t].find(row.subject_id);
        if (it == index[t].end()) {
          raise(Errc::SubjectSetMismatch,
                "subject '" + row.subject_id + "' missing from table " + std::to_string(t));
        }
        src = it->second;
      }
      for (std::size_t k = 0; k < mean.probs.size(); ++k) mean.probs[k] += src->probs[k];
    }
    for (double& p : mean.probs) p /= n;
    out.rows.push_back(std::move(mean));
  }
  return out;
}

void write_submission(const PredictionTable& table, const std::filesystem::path& path) {
  write_prob_csv(table, path, "patient_id", &fmt_fixed9, /*sorted=*/true);
}

PredictionTable load_submission(const std::filesystem::path& path) {
  return load_prob_csv(path, "patient_id");
}

void write_predictions_csv(const PredictionTable& table, const std::filesystem::path& path) {
  write_prob_csv(table, path, "subject_id", &fmt_full, /*sorted=*/false);
}

PredictionTable load_predictions_csv(const std::filesystem::path& path) {
  // Submissions are valid (rounded) prediction tables, so ensemble output can
  // feed straight back into pseudo-label selection.
  return load_prob_csv(path, "subject_id", "patient_id");
}

void write_pseudo_csv(const PseudoLabelBatch& batch, const std::filesystem::path& path) {
  CsvTable out;
  out.header = {"subject_id", "label", "confidence"};
  for (const auto& row : batch.rows) {
    out.rows.push_back({row.subject_id,
                        std::string(label_name(row.label == 0 ? Label::CE : Label::LAA)),
                        fmt_full(row.confidence)});
  }
  write_csv(path, out);
}

PseudoLabelBatch load_pseudo_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const int c_id = table.column("subject_id");
  const int c_label = table.column("label");
  const int c_conf = table.column("confidence");
  if (c_id < 0 || c_label < 0 || c_conf < 0) {
    raise(Errc::MissingColumn, path.string() + ": need subject_id, label, confidence");
  }
  PseudoLabelBatch batch;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    PseudoLabelRow rec;
    rec.subject_id = row[c_id];
    if (!seen.insert(rec.subject_id).second) {
      raise(Errc::SubjectCollision, "duplicate pseudo row for '" + rec.subject_id + "'");
    }
    const Label label = parse_label(row[c_label]);
    if (label != Label::CE && label != Label::LAA) {
      raise(Errc::IllegalLabelForKind, "pseudo label must be CE or LAA");
    }
    rec.label = label == Label::CE ? 0 : 1;
    rec.confidence = parse_prob(row[c_conf]);
    if (!(rec.confidence >= 0.0 && rec.confidence <= 1.0)) {
      raise(Errc::InvalidParams, "pseudo confidence outside [0, 1]");
    }
    batch.rows.push_back(std::move(rec));
  }
  return batch;
}

}  // namespace clotkit
