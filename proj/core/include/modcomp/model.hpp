#pragma once

#include "modcomp/data.hpp"
#include "modcomp/param_name.hpp"
#include "modcomp/tensor.hpp"

#include <vector>

namespace modcomp {

struct AdapterSet;  // defined in lora.hpp

struct ModelConfig {
    int n_layers = 4;
    int d_model = 64;
    int n_heads = 4;
    int d_ff = 256;
    int vocab_size = 64;
    int max_seq_len = 80;
    int seed = 0;

    void validate() const;  // throws ConfigError
    int head_dim() const { return d_model / n_heads; }
    bool operator==(const ModelConfig& o) const;
};

struct ModelParams {
    ModelConfig config;
    ParamMap weights;
};

// Canonical registry for a config: names in manifest order and their shapes.
std::vector<ParamName> registry_names(const ModelConfig& cfg);
std::vector<int> param_shape(const ModelConfig& cfg, const ParamName& name);

// Deterministic init from cfg.seed: Gaussian std 0.02 matrices, ones for norm
// scales. Each tensor is seeded from (seed, canonical name) so the draw does
// not depend on registry iteration order.
ModelParams init_model(const ModelConfig& cfg);

// Causal logits [T x vocab] for one sequence. Adapters, when given, overlay
// their targets as W + scale*B*A without touching the stored weights.
Tensor forward_logits(const ModelParams& params, const std::vector<int>& tokens,
                      const AdapterSet* adapters = nullptr);

// Mean masked next-token cross-entropy over the batch, pooled across
// sequences (sum of per-position losses / total unmasked positions).
// grads, when non-null, receives d loss / d weight for every registry name;
// adapter_grads additionally receives gradients for every (A, B) factor.
double loss_and_grads(const ModelParams& params, const Batch& batch, GradMap* grads,
                      const AdapterSet* adapters = nullptr, GradMap* adapter_grads = nullptr);

// Forward-only loss with float64 arithmetic over the f32 weights. This is the
// reference path for finite-difference gradient checks.
double batch_loss_f64(const ModelParams& params, const Batch& batch,
                      const AdapterSet* adapters = nullptr);

}  // namespace modcomp
