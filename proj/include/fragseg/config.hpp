#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fragseg/pipeline.hpp"

namespace fragseg {

/// Applies the keys present in `json_text` on top of `base`. Unknown keys throw JsonParseError.
PipelineConfig parse_config(std::string_view json_text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& file, PipelineConfig base = {});

/// Every field, with PPI-dependent defaults resolved for `ppi`.
std::string config_to_json(const PipelineConfig& cfg, double ppi = kReferencePpi);

}  // namespace fragseg
