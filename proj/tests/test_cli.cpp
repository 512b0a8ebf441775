// Integration tests that drive the installed `clotkit` binary end to end.
// CLOTKIT_CLI_PATH is injected by the build as the path to the executable.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "clotkit/csv.hpp"
#include "clotkit/dataset.hpp"
#include "clotkit/image_io.hpp"
#include "clotkit/predictions.hpp"
#include "clotkit/trainer.hpp"
#include "test_util.hpp"

using namespace clotkit;
using clotkit::testing::TempDir;
using clotkit::testing::read_bytes;
using clotkit::testing::read_text;
using clotkit::testing::write_text;

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;

  bool out_has(const std::string& needle) const { return out.find(needle) != std::string::npos; }
  bool err_has(const std::string& needle) const { return err.find(needle) != std::string::npos; }
};

std::string shell_quote(const std::string& s) {
  std::string quoted = "'";
  for (char c : s) {
    if (c == '\'') quoted += "'\\''";
    else quoted += c;
  }
  quoted += "'";
  return quoted;
}

CliResult run_cli(const std::vector<std::string>& args, const TempDir& tmp) {
  static int invocation = 0;
  const fs::path out_file = tmp / ("cli_stdout_" + std::to_string(invocation) + ".txt");
  const fs::path err_file = tmp / ("cli_stderr_" + std::to_string(invocation) + ".txt");
  ++invocation;

  std::ostringstream cmd;
  cmd << shell_quote(CLOTKIT_CLI_PATH);
  for (const auto& arg : args) cmd << ' ' << shell_quote(arg);
  cmd << " > " << shell_quote(out_file.string()) << " 2> " << shell_quote(err_file.string());

  const int status = std::system(cmd.str().c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = read_text(out_file);
  result.err = read_text(err_file);
  return result;
}

/// Slide fixture: white border, seeded noisy content block (values <= 200 so
/// every content pixel stays below the background threshold).
RasterImage slide_fixture(int w, int h, int bx0, int by0, int bw, int bh, unsigned seed) {
  RasterImage img = RasterImage::filled(w, h, 255, 255, 255);
  std::mt19937 gen(seed);
  std::uniform_int_distribution<int> dist(0, 200);
  for (int y = by0; y < by0 + bh; ++y) {
    for (int x = bx0; x < bx0 + bw; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>(dist(gen));
    }
  }
  return img;
}

void write_metadata_csv(const fs::path& path,
                        const std::vector<std::array<std::string, 4>>& rows) {
  std::string text = "image_id,patient_id,image_num,label\n";
  for (const auto& r : rows) {
    text += r[0] + "," + r[1] + "," + r[2] + "," + r[3] + "\n";
  }
  write_text(path, text);
}

/// Three-slide training fixture with one slide per patient.
struct PreprocessFixture {
  fs::path images;
  fs::path metadata;

  explicit PreprocessFixture(const TempDir& tmp, const std::string& name) {
    images = tmp / ("images_" + name);
    fs::create_directories(images);
    write_png(slide_fixture(160, 120, 20, 10, 80, 60, 1), images / "img_a.png");
    write_png(slide_fixture(96, 144, 8, 16, 40, 100, 2), images / "img_b.png");
    write_png(slide_fixture(128, 128, 30, 30, 64, 64, 3), images / "img_c.png");
    metadata = tmp / ("meta_" + name + ".csv");
    write_metadata_csv(metadata, {{"img_a", "p1", "1", "CE"},
                                  {"img_b", "p2", "1", "LAA"},
                                  {"img_c", "p3", "1", "CE"}});
  }
};

std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
  std::map<std::string, std::string> snapshot;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      snapshot[fs::relative(entry.path(), dir).string()] = read_bytes(entry.path());
    }
  }
  return snapshot;
}

/// Embedding fixture around two separable Gaussian blobs, one per class.
EmbeddingSet blob_embeddings(int subjects, int dim, unsigned seed,
                             const std::string& prefix) {
  EmbeddingSet set;
  set.dim = dim;
  std::mt19937 gen(seed);
  std::normal_distribution<double> noise(0.0, 0.5);
  for (int i = 0; i < subjects; ++i) {
    EmbeddingRow row;
    row.subject_id = prefix + std::to_string(i);
    const int cls = i % 2;
    for (int d = 0; d < dim; ++d) {
      row.features.push_back((cls == 0 ? 3.0 : -3.0) + noise(gen));
    }
    set.rows.push_back(std::move(row));
  }
  return set;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("preprocess converts a fixture tree and writes the manifest") {
  TempDir tmp;
  PreprocessFixture fixture(tmp, "basic");
  const fs::path out = tmp / "out";

  const auto res = run_cli({"preprocess", "--metadata", fixture.metadata.string(),
                            "--images", fixture.images.string(), "--out", out.string(),
                            "--side", "64"},
                           tmp);
  CAPTURE(res.err);
  CHECK(res.exit_code == 0);
  CHECK(res.out_has("image=img_a status=ok out=img_a.png"));
  CHECK(res.out_has("image=img_b status=ok out=img_b.png"));
  CHECK(res.out_has("image=img_c status=ok out=img_c.png"));
  CHECK(res.out_has("preprocess total=3 ok=3 failed=0"));

  for (const char* name : {"img_a.png", "img_b.png", "img_c.png"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(out / name));
    const auto img = decode_image(out / name);
    CHECK(img.width == 64);
    CHECK(img.height == 64);
  }

  const CsvTable manifest = read_csv(out / "manifest.csv");
  CHECK(manifest.header ==
        std::vector<std::string>{"image_id", "patient_id", "label", "orig_width",
                                 "orig_height", "crop_width", "crop_height", "out_path"});
  REQUIRE(manifest.rows.size() == 3);
  CHECK(manifest.rows[0][0] == "img_a");
  CHECK(manifest.rows[0][1] == "p1");
  CHECK(manifest.rows[0][2] == "CE");
  CHECK(manifest.rows[0][3] == "160");
  CHECK(manifest.rows[0][4] == "120");
  CHECK(manifest.rows[0][5] == "80");   // content block width
  CHECK(manifest.rows[0][6] == "60");   // content block height
  CHECK(manifest.rows[0][7] == "img_a.png");

  const CsvTable errors = read_csv(out / "errors.csv");
  CHECK(errors.rows.empty());
}

TEST_CASE("preprocess reports broken inputs and keeps going") {
  TempDir tmp;
  PreprocessFixture fixture(tmp, "broken");
  write_text(fixture.images / "img_b.png", "this is not a PNG at all");
  const fs::path out = tmp / "out";

  const auto res = run_cli({"preprocess", "--metadata", fixture.metadata.string(),
                            "--images", fixture.images.string(), "--out", out.string(),
                            "--side", "32"},
                           tmp);
  CHECK(res.exit_code == 1);
  CHECK(res.out_has("image=img_a status=ok"));
  CHECK(res.out_has("image=img_b status=error code="));
  CHECK(res.out_has("image=img_c status=ok"));
  CHECK(res.out_has("preprocess total=3 ok=2 failed=1"));
  CHECK(res.err_has("img_b"));

  CHECK(fs::exists(out / "img_a.png"));
  CHECK_FALSE(fs::exists(out / "img_b.png"));
  CHECK(fs::exists(out / "img_c.png"));

  const CsvTable errors = read_csv(out / "errors.csv");
  REQUIRE(errors.rows.size() == 1);
  CHECK(errors.rows[0][0] == "img_b");
  CHECK_FALSE(errors.rows[0][1].empty());

  const CsvTable manifest = read_csv(out / "manifest.csv");
  CHECK(manifest.rows.size() == 2);
}

TEST_CASE("preprocess output is byte-identical across reruns and job counts") {
  TempDir tmp;
  PreprocessFixture fixture(tmp, "determinism");

  const fs::path out1 = tmp / "out1";
  const fs::path out2 = tmp / "out2";
  const fs::path out4 = tmp / "out4";

  const std::vector<std::string> base = {"preprocess", "--metadata",
                                         fixture.metadata.string(), "--images",
                                         fixture.images.string(), "--side", "48"};

  auto with = [&base](const fs::path& out, const std::string& jobs) {
    auto args = base;
    args.insert(args.end(), {"--out", out.string(), "--jobs", jobs});
    return args;
  };

  CHECK(run_cli(with(out1, "1"), tmp).exit_code == 0);
  CHECK(run_cli(with(out2, "1"), tmp).exit_code == 0);
  CHECK(run_cli(with(out4, "4"), tmp).exit_code == 0);

  const auto snap1 = dir_bytes(out1);
  CHECK(snap1.size() == 5);  // 3 PNGs + manifest + errors
  CHECK(snap1 == dir_bytes(out2));
  CHECK(snap1 == dir_bytes(out4));
}

TEST_CASE("preprocess applies seeded augmentation from a pipeline file") {
  TempDir tmp;
  PreprocessFixture fixture(tmp, "augment");
  write_text(tmp / "pipe.json",
             R"({"stages": [{"transform": "RandomBrightness", "p": 1.0},
                            {"transform": "Cutout", "p": 1.0}]})");

  auto args = [&](const fs::path& out, const std::string& seed) {
    return std::vector<std::string>{
        "preprocess", "--metadata", fixture.metadata.string(), "--images",
        fixture.images.string(),    "--out",      out.string(), "--side", "64",
        "--augment", (tmp / "pipe.json").string(), "--augment-seed", seed};
  };

  CHECK(run_cli(args(tmp / "aug_a", "7"), tmp).exit_code == 0);
  CHECK(run_cli(args(tmp / "aug_b", "7"), tmp).exit_code == 0);
  CHECK(run_cli(args(tmp / "aug_c", "8"), tmp).exit_code == 0);
  CHECK(run_cli(args(tmp / "plain", "abc"), tmp).exit_code == 2);  // non-numeric seed

  const auto a = dir_bytes(tmp / "aug_a");
  CHECK(a == dir_bytes(tmp / "aug_b"));
  CHECK(a != dir_bytes(tmp / "aug_c"));

  // Augmented output differs from the unaugmented run.
  const fs::path plain_out = tmp / "plain2";
  CHECK(run_cli({"preprocess", "--metadata", fixture.metadata.string(), "--images",
                 fixture.images.string(), "--out", plain_out.string(), "--side", "64"},
                tmp)
            .exit_code == 0);
  CHECK(read_bytes(tmp / "aug_a" / "img_a.png") != read_bytes(plain_out / "img_a.png"));
}

TEST_CASE("preprocess --all keeps every chronological record") {
  TempDir tmp;
  const fs::path images = tmp / "images";
  fs::create_directories(images);
  write_png(slide_fixture(60, 40, 10, 10, 30, 20, 4), images / "early.png");
  write_png(slide_fixture(60, 40, 10, 10, 30, 20, 5), images / "late.png");
  const fs::path meta = tmp / "meta.csv";
  write_metadata_csv(meta, {{"early", "p1", "1", "CE"}, {"late", "p1", "2", "CE"}});

  const fs::path last_only = tmp / "last_only";
  auto res = run_cli({"preprocess", "--metadata", meta.string(), "--images",
                      images.string(), "--out", last_only.string(), "--side", "16"},
                     tmp);
  CHECK(res.exit_code == 0);
  CHECK(res.out_has("preprocess total=1 ok=1"));
  CHECK_FALSE(fs::exists(last_only / "early.png"));
  CHECK(fs::exists(last_only / "late.png"));

  const fs::path all = tmp / "all";
  res = run_cli({"preprocess", "--metadata", meta.string(), "--images", images.string(),
                 "--out", all.string(), "--side", "16", "--all"},
                tmp);
  CHECK(res.exit_code == 0);
  CHECK(res.out_has("preprocess total=2 ok=2"));
  CHECK(fs::exists(all / "early.png"));
  CHECK(fs::exists(all / "late.png"));
}

TEST_CASE("preprocess leaves its inputs untouched") {
  TempDir tmp;
  PreprocessFixture fixture(tmp, "readonly");
  const auto before_images = dir_bytes(fixture.images);
  const auto before_meta = read_bytes(fixture.metadata);

  CHECK(run_cli({"preprocess", "--metadata", fixture.metadata.string(), "--images",
                 fixture.images.string(), "--out", (tmp / "out").string(), "--side", "32"},
                tmp)
            .exit_code == 0);

  CHECK(dir_bytes(fixture.images) == before_images);
  CHECK(read_bytes(fixture.metadata) == before_meta);
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

TEST_CASE("split writes a deterministic stratified assignment") {
  TempDir tmp;
  std::vector<std::array<std::string, 4>> rows;
  for (int i = 0; i < 20; ++i) {
    const std::string patient = "p" + std::to_string(i);
    rows.push_back({"img_" + std::to_string(i), patient, "1", i < 12 ? "CE" : "LAA"});
  }
  const fs::path meta = tmp / "meta.csv";
  write_metadata_csv(meta, rows);

  const fs::path f1 = tmp / "folds1.csv";
  const fs::path f2 = tmp / "folds2.csv";
  const fs::path f3 = tmp / "folds3.csv";

  auto res = run_cli({"split", "--metadata", meta.string(), "--out", f1.string(), "--k",
                      "4", "--seed", "11"},
                     tmp);
  CHECK(res.exit_code == 0);
  CHECK(res.out_has("split patients=20 k=4 seed=11"));

  CHECK(run_cli({"split", "--metadata", meta.string(), "--out", f2.string(), "--k", "4",
                 "--seed", "11"},
                tmp)
            .exit_code == 0);
  CHECK(run_cli({"split", "--metadata", meta.string(), "--out", f3.string(), "--k", "4",
                 "--seed", "12"},
                tmp)
            .exit_code == 0);

  CHECK(read_bytes(f1) == read_bytes(f2));
  CHECK(read_bytes(f1) != read_bytes(f3));

  const FoldAssignment folds = read_folds_csv(f1);
  CHECK(folds.k == 4);
  CHECK(folds.fold_of_patient.size() == 20);
  std::array<int, 4> ce_per_fold{}, laa_per_fold{};
  for (const auto& [patient, fold] : folds.fold_of_patient) {
    const int i = std::stoi(patient.substr(1));
    (i < 12 ? ce_per_fold : laa_per_fold)[fold] += 1;
  }
  for (int f = 0; f < 4; ++f) {
    CHECK(ce_per_fold[f] == 3);  // 12 CE over 4 folds
    CHECK(laa_per_fold[f] == 2);  // 8 LAA over 4 folds
  }
}

// ---------------------------------------------------------------------------
// pseudo
// ---------------------------------------------------------------------------

TEST_CASE("pseudo selects confident predictions through the CLI") {
  TempDir tmp;
  PredictionTable preds;
  preds.rows = {{"s_sure_ce", {0.95, 0.05}},
                {"s_edge", {0.9, 0.1}},
                {"s_unsure", {0.89, 0.11}},
                {"s_sure_laa", {0.02, 0.98}}};
  const fs::path pred_path = tmp / "preds.csv";
  write_predictions_csv(preds, pred_path);

  const fs::path out = tmp / "pseudo.csv";
  const auto res = run_cli(
      {"pseudo", "--predictions", pred_path.string(), "--out", out.string()}, tmp);
  CHECK(res.exit_code == 0);
  CHECK(res.out_has("pseudo selected=3 total=4 threshold=0.900000"));

  const PseudoLabelBatch batch = load_pseudo_csv(out);
  REQUIRE(batch.rows.size() == 3);
  CHECK(batch.rows[0].subject_id == "s_sure_ce");
  CHECK(batch.rows[0].label == 0);
  CHECK(batch.rows[1].subject_id == "s_edge");  // 0.9 is selected inclusively
  CHECK(batch.rows[2].subject_id == "s_sure_laa");
  CHECK(batch.rows[2].label == 1);

  // A stricter threshold drops the edge row.
  const auto strict = run_cli({"pseudo", "--predictions", pred_path.string(), "--out",
                               (tmp / "strict.csv").string(), "--threshold", "0.94"},
                              tmp);
  CHECK(strict.exit_code == 0);
  CHECK(strict.out_has("pseudo selected=2 total=4"));

  // Invalid threshold is a data error, not a usage error.
  const auto bad = run_cli({"pseudo", "--predictions", pred_path.string(), "--out",
                            (tmp / "bad.csv").string(), "--threshold", "0.4"},
                           tmp);
  CHECK(bad.exit_code == 1);
  CHECK(bad.err_has("error[InvalidParams]"));
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

namespace {

struct TrainFixture {
  fs::path embeddings, metadata, folds;

  TrainFixture(const TempDir& tmp, int subjects) {
    const EmbeddingSet set = blob_embeddings(subjects, 4, 77, "p");
    embeddings = tmp / "embeddings.csv";
    write_embeddings_csv(embeddings.string(), set);

    std::vector<std::array<std::string, 4>> rows;
    for (int i = 0; i < subjects; ++i) {
      rows.push_back({"img_" + std::to_string(i), "p" + std::to_string(i), "1",
                      i % 2 == 0 ? "CE" : "LAA"});
    }
    metadata = tmp / "train_meta.csv";
    write_metadata_csv(metadata, rows);

    FoldAssignment assignment;
    assignment.k = 2;
    for (int i = 0; i < subjects; ++i) {
      assignment.fold_of_patient["p" + std::to_string(i)] = (i / 2) % 2;
    }
    folds = tmp / "folds.csv";
    write_folds_csv(assignment, folds);
  }
};

}  // namespace

TEST_CASE("train writes per-fold heads, histories and predictions") {
  TempDir tmp;
  TrainFixture fixture(tmp, 16);
  const fs::path out = tmp / "run";

  const auto res = run_cli(
      {"train", "--embeddings", fixture.embeddings.string(), "--metadata",
       fixture.metadata.string(), "--folds", fixture.folds.string(), "--out", out.string(),
       "--hidden1", "8", "--hidden2", "4", "--max-epochs", "4", "--dropout", "0.0",
       "--predict", fixture.embeddings.string(), "--seed", "3"},
      tmp);
  CAPTURE(res.err);
  CHECK(res.exit_code == 0);
  CHECK(res.out_has("train fold=0 best_epoch="));
  CHECK(res.out_has("train fold=1 best_epoch="));
  CHECK(res.out_has("train folds=2 rows=16 pseudo=0"));

  for (int f = 0; f < 2; ++f) {
    const std::string tag = "fold" + std::to_string(f);
    const HeadParams head = load_head((out / ("head_" + tag + ".bin")).string());
    CHECK(head.cfg.in_dim == 4);
    CHECK(head.cfg.hidden1 == 8);
    CHECK(head.cfg.hidden2 == 4);

    const auto history = read_history_csv((out / ("history_" + tag + ".csv")).string());
    CHECK(!history.empty());
    CHECK(history.size() <= 4);

    const PredictionTable preds = load_predictions_csv(out / ("preds_" + tag + ".csv"));
    CHECK(preds.rows.size() == 16);
  }

  // Same invocation, separate output directory: identical artifacts.
  const fs::path out2 = tmp / "run2";
  CHECK(run_cli({"train", "--embeddings", fixture.embeddings.string(), "--metadata",
                 fixture.metadata.string(), "--folds", fixture.folds.string(), "--out",
                 out2.string(), "--hidden1", "8", "--hidden2", "4", "--max-epochs", "4",
                 "--dropout", "0.0", "--predict", fixture.embeddings.string(), "--seed",
                 "3"},
                tmp)
            .exit_code == 0);
  CHECK(dir_bytes(out) == dir_bytes(out2));
}

TEST_CASE("train folds pseudo-labeled extras into every fold") {
  TempDir tmp;
  TrainFixture fixture(tmp, 12);

  const EmbeddingSet pool = blob_embeddings(4, 4, 99, "x");
  const fs::path pool_path = tmp / "pool.csv";
  write_embeddings_csv(pool_path.string(), pool);

  PseudoLabelBatch batch;
  batch.rows = {{"x0", 0, 0.97}, {"x3", 1, 0.93}};
  const fs::path pseudo_path = tmp / "pseudo.csv";
  write_pseudo_csv(batch, pseudo_path);

  const auto res = run_cli(
      {"train", "--embeddings", fixture.embeddings.string(), "--metadata",
       fixture.metadata.string(), "--folds", fixture.folds.string(), "--out",
       (tmp / "run").string(), "--hidden1", "6", "--hidden2", "3", "--max-epochs", "2",
       "--pseudo", pseudo_path.string(), "--pool", pool_path.string()},
      tmp);
  CAPTURE(res.err);
  CHECK(res.exit_code == 0);
  CHECK(res.out_has("train folds=2 rows=14 pseudo=2"));

  // --pseudo without --pool is a usage error.
  const auto lonely = run_cli(
      {"train", "--embeddings", fixture.embeddings.string(), "--metadata",
       fixture.metadata.string(), "--folds", fixture.folds.string(), "--out",
       (tmp / "run2").string(), "--pseudo", pseudo_path.string()},
      tmp);
  CHECK(lonely.exit_code == 2);
  CHECK(lonely.err_has("usage error:"));
}

// ---------------------------------------------------------------------------
// ensemble + evaluate
// ---------------------------------------------------------------------------

TEST_CASE("ensemble averages prediction files into a sorted submission") {
  TempDir tmp;
  std::mt19937 gen(41);
  std::uniform_real_distribution<double> dist(0.0, 1.0);

  std::vector<std::string> ids;
  for (int i = 0; i < 9; ++i) ids.push_back("p" + std::to_string(i));

  std::vector<PredictionTable> tables(3);
  std::vector<std::string> input_args;
  for (int t = 0; t < 3; ++t) {
    for (const auto& id : ids) {
      const double p = dist(gen);
      tables[t].rows.push_back({id, {p, 1.0 - p}});
    }
    const fs::path path = tmp / ("preds_" + std::to_string(t) + ".csv");
    write_predictions_csv(tables[t], path);
    input_args.push_back(path.string());
  }

  const fs::path out = tmp / "submission.csv";
  std::vector<std::string> args = {"ensemble", "--inputs"};
  args.insert(args.end(), input_args.begin(), input_args.end());
  args.insert(args.end(), {"--out", out.string()});

  const auto res = run_cli(args, tmp);
  CAPTURE(res.err);
  CHECK(res.exit_code == 0);
  CHECK(res.out_has("ensemble models=3 subjects=9"));

  const PredictionTable sub = load_submission(out);
  REQUIRE(sub.rows.size() == 9);
  CHECK(std::is_sorted(sub.rows.begin(), sub.rows.end(),
                       [](const PredictionRow& a, const PredictionRow& b) {
                         return a.subject_id < b.subject_id;
                       }));
  for (const auto& row : sub.rows) {
    const auto i = static_cast<std::size_t>(std::stoi(row.subject_id.substr(1)));
    double expect = 0.0;
    for (const auto& t : tables) expect += t.rows[i].probs[0];
    expect /= 3.0;
    CHECK(row.probs[0] == doctest::Approx(expect).epsilon(1e-8));  // 9-decimal file
  }
}

TEST_CASE("evaluate prints the weighted multiclass log loss") {
  TempDir tmp;

  PredictionTable sub;
  sub.rows = {{"p1", {0.5, 0.5}}, {"p2", {0.5, 0.5}}, {"p3", {0.5, 0.5}},
              {"p4", {0.5, 0.5}}};
  const fs::path sub_path = tmp / "submission.csv";
  write_submission(sub, sub_path);

  const fs::path sol_path = tmp / "solution.csv";
  write_text(sol_path, "patient_id,label\np1,CE\np2,CE\np3,LAA\np4,LAA\n");

  const auto res = run_cli(
      {"evaluate", "--submission", sub_path.string(), "--solution", sol_path.string()},
      tmp);
  CAPTURE(res.err);
  CHECK(res.exit_code == 0);
  CHECK(res.out == "0.693147\n");

  // Missing patient is a data error.
  write_text(sol_path, "patient_id,label\np1,CE\np2,CE\np3,LAA\npX,LAA\n");
  const auto missing = run_cli(
      {"evaluate", "--submission", sub_path.string(), "--solution", sol_path.string()},
      tmp);
  CHECK(missing.exit_code == 1);
  CHECK(missing.err_has("error[SubjectSetMismatch]"));
}

// ---------------------------------------------------------------------------
// config files and usage errors
// ---------------------------------------------------------------------------

TEST_CASE("--config fills options but explicit flags win") {
  TempDir tmp;
  std::vector<std::array<std::string, 4>> rows;
  for (int i = 0; i < 12; ++i) {
    rows.push_back({"img_" + std::to_string(i), "p" + std::to_string(i), "1",
                    i % 2 == 0 ? "CE" : "LAA"});
  }
  const fs::path meta = tmp / "meta.csv";
  write_metadata_csv(meta, rows);

  write_text(tmp / "config.json", R"({"k": 3, "seed": 21})");

  // Config supplies both values.
  auto res = run_cli({"split", "--config", (tmp / "config.json").string(), "--metadata",
                      meta.string(), "--out", (tmp / "a.csv").string()},
                     tmp);
  CHECK(res.exit_code == 0);
  CHECK(res.out_has("split patients=12 k=3 seed=21"));

  // The explicit flag overrides the config value; the config still fills seed.
  res = run_cli({"split", "--config", (tmp / "config.json").string(), "--metadata",
                 meta.string(), "--out", (tmp / "b.csv").string(), "--k", "2"},
                tmp);
  CHECK(res.exit_code == 0);
  CHECK(res.out_has("split patients=12 k=2 seed=21"));

  // Unknown config keys are usage errors.
  write_text(tmp / "bad.json", R"({"folds": 3})");
  res = run_cli({"split", "--config", (tmp / "bad.json").string(), "--metadata",
                 meta.string(), "--out", (tmp / "c.csv").string()},
                tmp);
  CHECK(res.exit_code == 2);
  CHECK(res.err_has("usage error:"));

  // And so is unparseable config JSON.
  write_text(tmp / "broken.json", "{");
  res = run_cli({"split", "--config", (tmp / "broken.json").string(), "--metadata",
                 meta.string(), "--out", (tmp / "d.csv").string()},
                tmp);
  CHECK(res.exit_code == 2);
}

TEST_CASE("usage errors exit with status 2") {
  TempDir tmp;

  auto res = run_cli({"preprocess", "--metadata"}, tmp);  // missing value + required
  CHECK(res.exit_code == 2);
  CHECK(res.err_has("usage error:"));

  res = run_cli({"split", "--metadata", "x.csv", "--out", "y.csv", "--bogus"}, tmp);
  CHECK(res.exit_code == 2);

  res = run_cli({"frobnicate"}, tmp);
  CHECK(res.exit_code == 2);

  res = run_cli({}, tmp);
  CHECK(res.exit_code == 2);

  res = run_cli({"split", "--metadata", "x.csv", "--out", "y.csv", "--k", "1"}, tmp);
  CHECK(res.exit_code == 2);  // k below the accepted range

  // Data problems exit 1 with a coded message instead.
  res = run_cli({"split", "--metadata", (tmp / "absent.csv").string(), "--out",
                 (tmp / "f.csv").string()},
                tmp);
  CHECK(res.exit_code == 1);
  CHECK(res.err_has("error["));

  // --help is not an error.
  res = run_cli({"--help"}, tmp);
  CHECK(res.exit_code == 0);
  CHECK(res.out_has("preprocess"));
  CHECK(res.out_has("ensemble"));
}

TEST_SUITE_END();
