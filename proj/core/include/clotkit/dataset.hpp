#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace clotkit {

enum class Label { CE, LAA, Other, Unknown, Unlabeled };
enum class DatasetKind { Train, Other, Test };

Label parse_label(std::string_view text);
std::string_view label_name(Label label) noexcept;
std::string_view kind_name(DatasetKind kind) noexcept;
DatasetKind parse_kind(std::string_view text);

/// One slide image: which patient it belongs to and where it sits in that
/// patient's chronological sequence.
struct ImageRecord {
  std::string image_id;
  std::string patient_id;
  std::string center_id;  // optional, may be empty
  Label label = Label::Unlabeled;
  std::int64_t image_num = 0;
  std::filesystem::path path;  // optional, may be empty
};

struct DatasetIndex {
  std::vector<ImageRecord> records;
  DatasetKind kind = DatasetKind::Train;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }
};

/// Counts and rates over the two training classes, ordered (CE, LAA).
struct ClassStats {
  std::array<std::int64_t, 2> counts{0, 0};
  std::array<double, 2> rates{0.0, 0.0};

  std::int64_t total() const { return counts[0] + counts[1]; }
};

/// Patient-level fold assignment; all images of a patient share its fold.
struct FoldAssignment {
  std::map<std::string, int> fold_of_patient;
  int k = 0;
  std::uint64_t seed = 0;

  int fold_of(const std::string& patient_id) const;
  bool contains(const std::string& patient_id) const {
    return fold_of_patient.count(patient_id) != 0;
  }
};

/// Loads and validates a metadata CSV. Required columns: image_id,
/// patient_id, image_num, label; center_id and path are optional. Records
/// come back sorted by (patient_id, image_num). Soft constraint violations
/// (a patient holding more than five images) are reported through
/// `warnings` when given, never as errors.
DatasetIndex load_metadata(const std::filesystem::path& path, DatasetKind kind,
                           std::vector<std::string>* warnings = nullptr);

/// Per-class counts and rates over an all-CE/LAA index.
ClassStats class_stats(const DatasetIndex& index);

/// Keeps, per patient, only the record with the greatest image_num.
DatasetIndex select_last_chronological(const DatasetIndex& index);

/// Patient-level stratified k-fold split: per class, patients are shuffled
/// with a seeded Fisher-Yates and dealt round-robin into folds. Per-fold
/// class counts land within one patient of the global proportion, and the
/// assignment is a pure function of (index, k, seed).
FoldAssignment stratified_kfold(const DatasetIndex& index, int k, std::uint64_t seed);

void write_folds_csv(const FoldAssignment& folds, const std::filesystem::path& path);
FoldAssignment read_folds_csv(const std::filesystem::path& path);

/// Label of a patient's last chronological record, for every patient.
std::map<std::string, Label> patient_labels(const DatasetIndex& index);

}  // namespace clotkit
