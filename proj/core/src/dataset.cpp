#include "clotkit/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_map>
#include <unordered_set>

#include "clotkit/csv.hpp"
#include "clotkit/errors.hpp"
#include "clotkit/rng.hpp"

namespace clotkit {

Label parse_label(std::string_view text) {
  if (text == "CE") return Label::CE;
  if (text == "LAA") return Label::LAA;
  if (text == "Other") return Label::Other;
  if (text == "Unknown") return Label::Unknown;
  if (text.empty() || text == "Unlabeled") return Label::Unlabeled;
  raise(Errc::IllegalLabelForKind, "unrecognized label '" + std::string(text) + "'");
}

std::string_view label_name(Label label) noexcept {
  switch (label) {
    case Label::CE: return "CE";
    case Label::LAA: return "LAA";
    case Label::Other: return "Other";
    case Label::Unknown: return "Unknown";
    case Label::Unlabeled: return "Unlabeled";
  }
  return "?";
}

std::string_view kind_name(DatasetKind kind) noexcept {
  switch (kind) {
    case DatasetKind::Train: return "train";
    case DatasetKind::Other: return "other";
    case DatasetKind::Test: return "test";
  }
  return "?";
}

DatasetKind parse_kind(std::string_view text) {
  if (text == "train") return DatasetKind::Train;
  if (text == "other") return DatasetKind::Other;
  if (text == "test") return DatasetKind::Test;
  raise(Errc::InvalidParams, "unrecognized dataset kind '" + std::string(text) + "'");
}

int FoldAssignment::fold_of(const std::string& patient_id) const {
  auto it = fold_of_patient.find(patient_id);
  if (it == fold_of_patient.end()) {
    raise(Errc::SubjectSetMismatch, "patient '" + patient_id + "' has no fold");
  }
  return it->second;
}

namespace {

bool label_legal_for_kind(Label label, DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Train:
      return label == Label::CE || label == Label::LAA;
    case DatasetKind::Other:
      return label == Label::Other || label == Label::Unknown;
    case DatasetKind::Test:
      return label == Label::Unlabeled;
  }
  return false;
}

std::int64_t parse_image_num(std::string_view text) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 0) {
    raise(Errc::InvalidParams, "image_num must be a non-negative integer, got '" +
                                   std::string(text) + "'");
  }
  return value;
}

}  // namespace

DatasetIndex load_metadata(const std::filesystem::path& path, DatasetKind kind,
                           std::vector<std::string>* warnings) {
  if (!std::filesystem::exists(path)) {
    raise(Errc::IoError, "metadata file not found: " + path.string());
  }
  CsvTable csv = read_csv(path);
  for (const char* required : {"image_id", "patient_id", "image_num", "label"}) {
    if (csv.column(required) < 0) {
      raise(Errc::MissingColumn, std::string(required) + " missing from " + path.string());
    }
  }
  const int col_image = csv.column("image_id");
  const int col_patient = csv.column("patient_id");
  const int col_num = csv.column("image_num");
  const int col_label = csv.column("label");
  const int col_center = csv.column("center_id");
  const int col_path = csv.column("path");

  DatasetIndex index;
  index.kind = kind;
  index.records.reserve(csv.rows.size());

  std::unordered_set<std::string> seen_ids;
  seen_ids.reserve(csv.rows.size());

  for (const auto& row : csv.rows) {
    ImageRecord rec;
    rec.image_id = row.at(col_image);
    rec.patient_id = row.at(col_patient);
    rec.image_num = parse_image_num(row.at(col_num));
    rec.label = parse_label(row.at(col_label));
    if (col_center >= 0 && static_cast<std::size_t>(col_center) < row.size()) {
      rec.center_id = row[col_center];
    }
    if (col_path >= 0 && static_cast<std::size_t>(col_path) < row.size()) {
      rec.path = row[col_path];
    }
    if (!seen_ids.insert(rec.image_id).second) {
      raise(Errc::DuplicateImageId, "image_id '" + rec.image_id + "' appears twice");
    }
    if (!label_legal_for_kind(rec.label, kind)) {
      raise(Errc::IllegalLabelForKind,
            "label '" + std::string(label_name(rec.label)) + "' not allowed in " +
                std::string(kind_name(kind)) + " dataset (image '" + rec.image_id + "')");
    }
    index.records.push_back(std::move(rec));
  }

  std::sort(index.records.begin(), index.records.end(),
            [](const ImageRecord& a, const ImageRecord& b) {
              if (a.patient_id != b.patient_id) return a.patient_id < b.patient_id;
              return a.image_num < b.image_num;
            });

  // image_num must be unique within a patient; records are sorted so
  // duplicates are adjacent.
  for (std::size_t i = 1; i < index.records.size(); ++i) {
    const auto& prev = index.records[i - 1];
    const auto& cur = index.records[i];
    if (prev.patient_id == cur.patient_id && prev.image_num == cur.image_num) {
      raise(Errc::DuplicateImageNum,
            "patient '" + cur.patient_id + "' has two records with image_num " +
                std::to_string(cur.image_num));
    }
  }

  if (warnings) {
    std::size_t i = 0;
    while (i < index.records.size()) {
      std::size_t j = i;
      while (j < index.records.size() &&
             index.records[j].patient_id == index.records[i].patient_id) {
        ++j;
      }
      if (j - i > 5) {
        warnings->push_back("patient '" + index.records[i].patient_id + "' has " +
                            std::to_string(j - i) + " images (expected at most 5)");
      }
      i = j;
    }
  }

  return index;
}

ClassStats class_stats(const DatasetIndex& index) {
  if (index.empty()) raise(Errc::EmptyIndex, "class_stats over an empty index");
  ClassStats stats;
  for (const auto& rec : index.records) {
    if (rec.label == Label::CE) {
      ++stats.counts[0];
    } else if (rec.label == Label::LAA) {
      ++stats.counts[1];
    } else {
      raise(Errc::IllegalLabelForKind,
            "class_stats requires CE/LAA records, got '" +
                std::string(label_name(rec.label)) + "'");
    }
  }
  const double total = static_cast<double>(stats.total());
  stats.rates[0] = static_cast<double>(stats.counts[0]) / total;
  stats.rates[1] = static_cast<double>(stats.counts[1]) / total;
  return stats;
}

DatasetIndex select_last_chronological(const DatasetIndex& index) {
  DatasetIndex out;
  out.kind = index.kind;
  // Records are kept sorted by (patient_id, image_num), so the last record
  // of each patient group is the chronologically last image.
  std::vector<ImageRecord> sorted = index.records;
  std::sort(sorted.begin(), sorted.end(),
            [](const ImageRecord& a, const ImageRecord& b) {
              if (a.patient_id != b.patient_id) return a.patient_id < b.patient_id;
              return a.image_num < b.image_num;
            });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 == sorted.size() || sorted[i + 1].patient_id != sorted[i].patient_id) {
      out.records.push_back(sorted[i]);
    }
  }
  return out;
}

std::map<std::string, Label> patient_labels(const DatasetIndex& index) {
  DatasetIndex last = select_last_chronological(index);
  std::map<std::string, Label> labels;
  for (const auto& rec : last.records) labels[rec.patient_id] = rec.label;
  return labels;
}

FoldAssignment stratified_kfold(const DatasetIndex& index, int k, std::uint64_t seed) {
  if (k < 2) raise(Errc::InvalidParams, "k must be at least 2");

  // Group patients by class label (label of the last chronological record).
  auto labels = patient_labels(index);
  std::map<Label, std::vector<std::string>> by_class;
  for (const auto& [patient, label] : labels) by_class[label].push_back(patient);

  FoldAssignment folds;
  folds.k = k;
  folds.seed = seed;

  std::uint64_t class_stream = 0;
  for (auto& [label, patients] : by_class) {
    if (static_cast<int>(patients.size()) < k) {
      raise(Errc::TooFewPatients,
            "class " + std::string(label_name(label)) + " has " +
                std::to_string(patients.size()) + " patients, need at least " +
                std::to_string(k));
    }
    // patients arrive sorted (std::map key order); seeded Fisher-Yates.
    CounterRng rng(seed, class_stream++);
    for (std::size_t i = patients.size() - 1; i > 0; --i) {
      std::size_t j = rng.next_below(static_cast<std::uint32_t>(i + 1));
      std::swap(patients[i], patients[j]);
    }
    for (std::size_t i = 0; i < patients.size(); ++i) {
      folds.fold_of_patient[patients[i]] = static_cast<int>(i % k);
    }
  }
  return folds;
}

void write_folds_csv(const FoldAssignment& folds, const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(folds.fold_of_patient.size());
  for (const auto& [patient, fold] : folds.fold_of_patient) {
    rows.push_back({patient, std::to_string(fold)});
  }
  write_csv(path, {"patient_id", "fold"}, rows);
}

FoldAssignment read_folds_csv(const std::filesystem::path& path) {
  CsvTable csv = read_csv(path);
  const int col_patient = csv.column("patient_id");
  const int col_fold = csv.column("fold");
  if (col_patient < 0 || col_fold < 0) {
    raise(Errc::MissingColumn, "folds CSV needs patient_id and fold columns");
  }
  FoldAssignment folds;
  for (const auto& row : csv.rows) {
    int fold = std::stoi(row.at(col_fold));
    folds.fold_of_patient[row.at(col_patient)] = fold;
    folds.k = std::max(folds.k, fold + 1);
  }
  return folds;
}

}  // namespace clotkit
