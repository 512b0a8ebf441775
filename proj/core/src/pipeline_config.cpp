#include "clotkit/pipeline_config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "clotkit/errors.hpp"

namespace clotkit {

namespace {

using nlohmann::json;

double as_number(const json& j, const char* what) {
  if (!j.is_number()) raise(Errc::InvalidParams, std::string(what) + " must be a number");
  return j.get<double>();
}

TransformSpec parse_transform(const json& j) {
  if (!j.is_object() || !j.contains("transform")) {
    raise(Errc::InvalidParams, "each transform entry needs a \"transform\" name");
  }
  TransformSpec spec;
  spec.kind = parse_transform_kind(j.at("transform").get<std::string>());
  if (j.contains("p")) spec.probability = as_number(j.at("p"), "p");
  if (j.contains("params")) {
    const json& params = j.at("params");
    if (!params.is_object()) raise(Errc::InvalidParams, "\"params\" must be an object");
    for (const auto& [key, value] : params.items()) {
      spec.params[key] = as_number(value, key.c_str());
    }
  }
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "transform" && key != "p" && key != "params") {
      raise(Errc::InvalidParams, "unknown transform key \"" + key + "\"");
    }
  }
  resolved_params(spec);  // validates names and ranges eagerly
  return spec;
}

std::array<double, 3> parse_triple(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    raise(Errc::InvalidParams, std::string(what) + " must be an array of 3 numbers");
  }
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) out[i] = as_number(j.at(i), what);
  return out;
}

}  // namespace

PipelineFile parse_pipeline_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    raise(Errc::CorruptFile, std::string("pipeline JSON does not parse: ") + e.what());
  }
  if (!root.is_object() || !root.contains("stages") || !root.at("stages").is_array()) {
    raise(Errc::InvalidParams, "pipeline JSON needs a \"stages\" array");
  }

  PipelineFile file;
  for (const json& entry : root.at("stages")) {
    PipelineStage stage;
    if (entry.is_object() && entry.contains("one_of")) {
      const json& members = entry.at("one_of");
      if (!members.is_array() || members.empty()) {
        raise(Errc::InvalidParams, "\"one_of\" must be a non-empty array");
      }
      for (const json& member : members) stage.choices.push_back(parse_transform(member));
      if (entry.contains("p")) stage.probability = as_number(entry.at("p"), "p");
      if (entry.contains("weights")) {
        const json& weights = entry.at("weights");
        if (!weights.is_array() || weights.size() != members.size()) {
          raise(Errc::InvalidParams, "\"weights\" length must match \"one_of\"");
        }
        for (const json& w : weights) stage.weights.push_back(as_number(w, "weight"));
      }
    } else {
      stage.choices.push_back(parse_transform(entry));
      stage.probability = stage.choices[0].probability;
    }
    if (!(stage.probability >= 0.0 && stage.probability <= 1.0)) {
      raise(Errc::InvalidParams, "stage probability outside [0, 1]");
    }
    file.pipeline.stages.push_back(std::move(stage));
  }

  if (root.contains("normalize")) {
    const json& norm = root.at("normalize");
    if (!norm.is_object()) raise(Errc::InvalidParams, "\"normalize\" must be an object");
    if (norm.contains("mean")) file.normalization.mean = parse_triple(norm.at("mean"), "mean");
    if (norm.contains("std")) file.normalization.std = parse_triple(norm.at("std"), "std");
    for (double s : file.normalization.std) {
      if (!(s > 0.0)) raise(Errc::InvalidParams, "normalize.std entries must be positive");
    }
  }
  return file;
}

PipelineFile load_pipeline_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) raise(Errc::IoError, "cannot open pipeline config '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return parse_pipeline_json(buffer.str());
}

void write_pipeline_json(const PipelineFile& file, const std::filesystem::path& path) {
  json stages = json::array();
  for (const PipelineStage& stage : file.pipeline.stages) {
    auto member = [](const TransformSpec& spec) {
      json j{{"transform", std::string(transform_kind_name(spec.kind))}};
      if (!spec.params.empty()) {
        json params = json::object();
        for (const auto& [key, value] : spec.params) params[key] = value;
        j["params"] = std::move(params);
      }
      return j;
    };
    json entry;
    if (stage.one_of()) {
      json members = json::array();
      for (const TransformSpec& spec : stage.choices) members.push_back(member(spec));
      entry["one_of"] = std::move(members);
      if (!stage.weights.empty()) entry["weights"] = stage.weights;
    } else {
      entry = member(stage.choices.at(0));
    }
    entry["p"] = stage.probability;
    stages.push_back(std::move(entry));
  }
  json root{{"stages", std::move(stages)},
            {"normalize", {{"mean", file.normalization.mean}, {"std", file.normalization.std}}}};

  std::ofstream os(path, std::ios::trunc);
  if (!os) raise(Errc::IoError, "cannot write pipeline config '" + path.string() + "'");
  os << root.dump(2) << '\n';
  if (!os) raise(Errc::IoError, "short write to '" + path.string() + "'");
}

}  // namespace clotkit
