#pragma once

#include <filesystem>
#include <string>

#include "dfc/num/autograd.hpp"
#include "json.hpp"

namespace dfc::num {

// Writes `<stem>.json` (manifest: model config, vocabulary reference and
// per-parameter name, shape and byte offset) and `<stem>.bin` (little-endian
// float32 values, parameters in order).
void save_checkpoint(const std::filesystem::path& stem, const ParameterSet<float>& params,
                     const nlohmann::json& model_config, const std::string& vocab_ref);

// Reads the manifest only.
nlohmann::json read_manifest(const std::filesystem::path& stem);

// Loads values into an existing parameter set after checking that names and
// shapes agree with the manifest. Returns the manifest.
nlohmann::json load_checkpoint(const std::filesystem::path& stem, ParameterSet<float>& params);

std::filesystem::path manifest_path(const std::filesystem::path& stem);
std::filesystem::path blob_path(const std::filesystem::path& stem);

}  // namespace dfc::num
