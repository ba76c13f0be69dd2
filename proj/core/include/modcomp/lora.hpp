#pragma once

#include "modcomp/model.hpp"
#include "modcomp/param_name.hpp"

#include <cmath>
#include <map>
#include <vector>

namespace modcomp {

// Rank-stabilized LoRA: delta = (alpha / sqrt(rank)) * B * A.
struct AdapterConfig {
    int rank = 8;
    float alpha = 16.0f;
    std::vector<ParamName> target_names;
    int seed = 0;

    float scale() const { return alpha / std::sqrt(static_cast<float>(rank)); }
    void validate() const;  // throws ConfigError
};

struct AdapterPair {
    Tensor a;  // [rank x d_in]
    Tensor b;  // [d_out x rank]
};

struct AdapterSet {
    AdapterConfig config;
    std::map<ParamName, AdapterPair> pairs;

    const AdapterPair* find(const ParamName& name) const;
};

// Every attention and MLP matrix: q/k/v/o and gate/up/down in all layers.
// Norm scales and embeddings are never wrapped.
std::vector<ParamName> default_lora_targets(const ModelConfig& cfg);

// A Gaussian (std 0.02) from config.seed, B zero, so the initial delta vanishes.
AdapterSet init_adapters(const AdapterConfig& config, const ModelParams& params);

Tensor adapter_delta(const AdapterSet& set, const ParamName& name);

// Folds every delta into its wrapped weight; non-targets are untouched.
ModelParams merge_adapters(const ModelParams& params, const AdapterSet& set);

}  // namespace modcomp
