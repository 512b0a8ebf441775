#pragma once

#include <filesystem>
#include <string>

#include "clotkit/augment.hpp"

namespace clotkit {

/// An augmentation program plus the normalization constants that follow it.
struct PipelineFile {
  AugPipeline pipeline;
  NormalizationSpec normalization;
};

/// Parses the JSON pipeline schema:
///
///   {
///     "stages": [
///       {"transform": "ToGray", "p": 0.5, "params": {"...": 1.0}},
///       {"one_of": [{"transform": "MotionBlur"}, ...], "p": 0.5,
///        "weights": [1, 1, ...]}                          // weights optional
///     ],
///     "normalize": {"mean": [m0,m1,m2], "std": [s0,s1,s2]}  // optional block
///   }
///
/// Malformed JSON raises CorruptFile; schema violations raise InvalidParams.
PipelineFile parse_pipeline_json(const std::string& text);
PipelineFile load_pipeline_json(const std::filesystem::path& path);
void write_pipeline_json(const PipelineFile& file, const std::filesystem::path& path);

}  // namespace clotkit
