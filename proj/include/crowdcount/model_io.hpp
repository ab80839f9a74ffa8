#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "crowdcount/pipeline.hpp"

namespace crowdcount {

nlohmann::json model_to_json(const TrainedModel& model);
/// Throws ErrorCode::ModelIncompatible on version or layout mismatch.
TrainedModel model_from_json(const nlohmann::json& j);

std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view text);

void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

/// FNV-1a of the serialized model.
std::uint64_t model_digest(const TrainedModel& model);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

}  // namespace crowdcount
