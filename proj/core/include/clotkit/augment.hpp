#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "clotkit/raster.hpp"
#include "clotkit/rng.hpp"

namespace clotkit {

enum class TransformKind {
  ToGray,
  Transpose,
  VerticalFlip,
  HorizontalFlip,
  RandomBrightness,
  RandomContrast,
  MotionBlur,
  MedianBlur,
  GaussianBlur,
  GaussNoise,
  OpticalDistortion,
  GridDistortion,
  ElasticTransform,
  Clahe,
  HueSaturationValue,
  ShiftScaleRotate,
  RandomResizedCrop,
  Cutout,
};

TransformKind parse_transform_kind(std::string_view name);
std::string_view transform_kind_name(TransformKind kind) noexcept;

/// One transform with its firing probability and parameter overrides.
/// Omitted parameters take the documented defaults; unknown names or
/// out-of-range values raise InvalidParams.
struct TransformSpec {
  TransformKind kind = TransformKind::HorizontalFlip;
  double probability = 0.5;
  std::map<std::string, double> params;
};

/// Defaults merged with overrides, after validation.
std::map<std::string, double> resolved_params(const TransformSpec& spec);

/// A pipeline stage: one transform gated by `probability`, or a OneOf group
/// that fires with `probability` and then picks a single member (uniformly,
/// or by normalized `weights` when non-empty).
struct PipelineStage {
  std::vector<TransformSpec> choices;
  double probability = 0.5;
  std::vector<double> weights;

  bool one_of() const { return choices.size() > 1; }
};

struct AugPipeline {
  std::vector<PipelineStage> stages;
};

struct NormalizationSpec {
  std::array<double, 3> mean{0.485, 0.456, 0.406};
  std::array<double, 3> std{0.229, 0.224, 0.225};
};

/// Applies one transform, drawing its parameters from `rng` in a fixed,
/// documented order: identical (spec, image, rng state) triples give
/// byte-identical outputs on every platform.
RasterImage apply_transform(const TransformSpec& spec, const RasterImage& img,
                            CounterRng& rng);

/// Runs the stages in order against a single seeded stream. Every stage
/// consumes exactly one gate draw; a firing OneOf consumes one selection
/// draw; parameter draws happen only inside transforms that fire.
RasterImage compose_pipeline(const AugPipeline& pipeline, const RasterImage& img,
                             std::uint64_t seed);

/// out[c][y][x] = (in(x, y, c) / 255 - mean[c]) / std[c]
FloatTensor normalize(const RasterImage& img, const NormalizationSpec& spec);

/// The default training pipeline: the standard transform list with OneOf
/// blur and OneOf distortion groups, all probabilities 0.5.
AugPipeline default_pipeline();

}  // namespace clotkit
