#include <doctest.h>

#include <functional>
#include <string>

#include "clotkit/errors.hpp"
#include "clotkit/pipeline_config.hpp"
#include "test_util.hpp"

using namespace clotkit;
using clotkit::testing::TempDir;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a clotkit::Error");
  return Errc::IoError;
}

void check_same_pipeline(const AugPipeline& a, const AugPipeline& b) {
  REQUIRE(a.stages.size() == b.stages.size());
  for (std::size_t s = 0; s < a.stages.size(); ++s) {
    CAPTURE(s);
    const auto& sa = a.stages[s];
    const auto& sb = b.stages[s];
    CHECK(sa.probability == sb.probability);
    CHECK(sa.weights == sb.weights);
    REQUIRE(sa.choices.size() == sb.choices.size());
    for (std::size_t c = 0; c < sa.choices.size(); ++c) {
      CHECK(sa.choices[c].kind == sb.choices[c].kind);
      CHECK(sa.choices[c].params == sb.choices[c].params);
    }
  }
}

}  // namespace

TEST_SUITE_BEGIN("pipeline_config");

TEST_CASE("parse_pipeline_json reads singles, OneOf groups, and normalization") {
  const std::string text = R"({
    "stages": [
      {"transform": "HorizontalFlip", "p": 1.0},
      {"transform": "RandomBrightness", "p": 0.25, "params": {"limit": 0.1}},
      {"one_of": [
         {"transform": "MotionBlur"},
         {"transform": "GaussianBlur", "params": {"kernel_max": 5}}
       ],
       "p": 0.75, "weights": [2, 1]}
    ],
    "normalize": {"mean": [0.5, 0.5, 0.5], "std": [0.25, 0.25, 0.2]}
  })";

  const auto file = parse_pipeline_json(text);
  REQUIRE(file.pipeline.stages.size() == 3);

  const auto& s0 = file.pipeline.stages[0];
  CHECK(s0.choices.size() == 1);
  CHECK(s0.choices[0].kind == TransformKind::HorizontalFlip);
  CHECK(s0.probability == 1.0);
  CHECK_FALSE(s0.one_of());

  const auto& s1 = file.pipeline.stages[1];
  CHECK(s1.choices[0].kind == TransformKind::RandomBrightness);
  CHECK(s1.probability == 0.25);
  CHECK(s1.choices[0].params.at("limit") == 0.1);

  const auto& s2 = file.pipeline.stages[2];
  CHECK(s2.one_of());
  REQUIRE(s2.choices.size() == 2);
  CHECK(s2.choices[0].kind == TransformKind::MotionBlur);
  CHECK(s2.choices[1].kind == TransformKind::GaussianBlur);
  CHECK(s2.choices[1].params.at("kernel_max") == 5);
  CHECK(s2.probability == 0.75);
  CHECK(s2.weights == std::vector<double>{2.0, 1.0});

  CHECK(file.normalization.mean == std::array<double, 3>{0.5, 0.5, 0.5});
  CHECK(file.normalization.std == std::array<double, 3>{0.25, 0.25, 0.2});
}

TEST_CASE("parse_pipeline_json defaults omitted fields") {
  const auto file = parse_pipeline_json(R"({"stages": [{"transform": "ToGray"}]})");
  REQUIRE(file.pipeline.stages.size() == 1);
  CHECK(file.pipeline.stages[0].probability == 0.5);
  CHECK(file.normalization.mean == std::array<double, 3>{0.485, 0.456, 0.406});
  CHECK(file.normalization.std == std::array<double, 3>{0.229, 0.224, 0.225});
}

TEST_CASE("malformed JSON raises CorruptFile") {
  CHECK(code_of([] { parse_pipeline_json("{ stages: ["); }) == Errc::CorruptFile);
  CHECK(code_of([] { parse_pipeline_json(""); }) == Errc::CorruptFile);
  CHECK(code_of([] { parse_pipeline_json("[1, 2"); }) == Errc::CorruptFile);
}

TEST_CASE("schema violations raise InvalidParams") {
  auto bad = [](const std::string& text) {
    return code_of([&] { parse_pipeline_json(text); });
  };

  CHECK(bad(R"({})") == Errc::InvalidParams);
  CHECK(bad(R"({"stages": 3})") == Errc::InvalidParams);
  CHECK(bad(R"({"stages": [{"p": 0.5}]})") == Errc::InvalidParams);
  CHECK(bad(R"({"stages": [{"transform": "Posterize"}]})") == Errc::InvalidParams);
  CHECK(bad(R"({"stages": [{"transform": "ToGray", "prob": 0.5}]})") ==
        Errc::InvalidParams);
  CHECK(bad(R"({"stages": [{"transform": "ToGray", "p": 1.5}]})") == Errc::InvalidParams);
  CHECK(bad(R"({"stages": [{"transform": "ToGray", "p": "half"}]})") ==
        Errc::InvalidParams);
  CHECK(bad(R"({"stages": [{"transform": "RandomBrightness",
                            "params": {"limit": 5.0}}]})") == Errc::InvalidParams);
  CHECK(bad(R"({"stages": [{"transform": "RandomBrightness",
                            "params": {"limits": 0.1}}]})") == Errc::InvalidParams);
  CHECK(bad(R"({"stages": [{"one_of": []}]})") == Errc::InvalidParams);
  CHECK(bad(R"({"stages": [{"one_of": [{"transform": "ToGray"},
                                       {"transform": "Transpose"}],
                            "weights": [1]}]})") == Errc::InvalidParams);
  CHECK(bad(R"({"stages": [{"transform": "ToGray"}],
                "normalize": {"std": [0.0, 0.2, 0.2]}})") == Errc::InvalidParams);
  CHECK(bad(R"({"stages": [{"transform": "ToGray"}],
                "normalize": {"mean": [0.5, 0.5]}})") == Errc::InvalidParams);
  CHECK(bad(R"({"stages": [{"transform": "ToGray"}], "normalize": 7})") ==
        Errc::InvalidParams);
}

TEST_CASE("write_pipeline_json round-trips through load_pipeline_json") {
  TempDir tmp;

  PipelineFile file;
  file.pipeline = default_pipeline();
  file.normalization.mean = {0.5, 0.4, 0.3};
  file.normalization.std = {0.2, 0.25, 0.3};

  // Exercise params and weights in the serialized form too.
  file.pipeline.stages[4].choices[0].params["limit"] = 0.15;
  file.pipeline.stages[6].weights = {1.0, 2.0, 3.0, 4.0};

  const auto path = tmp / "pipeline.json";
  write_pipeline_json(file, path);
  const auto back = load_pipeline_json(path);

  check_same_pipeline(file.pipeline, back.pipeline);
  CHECK(back.normalization.mean == file.normalization.mean);
  CHECK(back.normalization.std == file.normalization.std);

  // And the round-trip is a fixed point: writing again produces the same file.
  const auto path2 = tmp / "pipeline2.json";
  write_pipeline_json(back, path2);
  CHECK(clotkit::testing::read_text(path) == clotkit::testing::read_text(path2));
}

TEST_CASE("load_pipeline_json on a missing file raises IoError") {
  TempDir tmp;
  CHECK(code_of([&] { load_pipeline_json(tmp / "nope.json"); }) == Errc::IoError);
}

TEST_SUITE_END();
