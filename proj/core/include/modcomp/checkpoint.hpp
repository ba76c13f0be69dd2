#pragma once

#include "modcomp/lora.hpp"
#include "modcomp/model.hpp"
#include "modcomp/optimizer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace modcomp {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

enum class CheckpointKind { weights, lora, optim };

const char* checkpoint_kind_str(CheckpointKind k);
CheckpointKind checkpoint_kind_parse(const std::string& s);

struct ManifestEntry {
    std::string name;
    std::vector<int> shape;
    std::uint64_t offset = 0;  // byte offset into the payload
};

struct CheckpointInfo {
    std::uint32_t format_version = 0;
    CheckpointKind kind = CheckpointKind::weights;
    ModelConfig config;
    std::vector<ManifestEntry> manifest;
    std::string content_hash;  // FNV-1a 64 over payload bytes, 16 hex digits
};

// Parses the header only; cheap way to inspect kind, config, and hash.
CheckpointInfo read_checkpoint_info(const std::string& path);

// File layout: u64 little-endian header length, JSON header, then the payload
// of raw little-endian f32 tensors packed in manifest order. Loaders check
// the version, kind, payload length, and content hash and throw
// CheckpointError on any mismatch.
void save_model_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_model_checkpoint(const std::string& path);

void save_adapter_checkpoint(const AdapterSet& adapters, const ModelConfig& config,
                             const std::string& path);
AdapterSet load_adapter_checkpoint(const std::string& path, ModelConfig* config_out = nullptr);

void save_optim_checkpoint(const OptimizerState& state, const ModelConfig& config,
                           const std::string& path);
OptimizerState load_optim_checkpoint(const std::string& path);

}  // namespace modcomp
