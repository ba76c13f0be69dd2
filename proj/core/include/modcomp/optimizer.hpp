#pragma once

#include "modcomp/param_name.hpp"
#include "modcomp/tensor.hpp"

#include <map>
#include <vector>

namespace modcomp {

struct OptimizerConfig {
    float lr = 3e-4f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    float weight_decay = 0.01f;
    int warmup_steps = 100;
    float max_grad_norm = 1.0f;

    void validate() const;  // throws ConfigError
};

struct MomentEntry {
    Tensor m;
    Tensor v;
    int t = 0;  // steps in which this parameter was trainable
};

// Moments appear lazily, the first time a parameter is trained. A parameter
// outside the trainable set keeps its weights, moments, and t untouched, so
// one state can serve two alternating parameter sides as if each had its own
// optimizer.
struct OptimizerState {
    std::map<ParamName, MomentEntry> moments;
    int global_step = 0;
};

// Scales grads in place when their joint L2 norm exceeds max_norm.
// Returns the pre-clip norm. Throws NumericError on non-finite gradients.
double clip_global_norm(GradMap& grads, float max_norm);

// Linear 0 -> lr over warmup_steps, then constant.
float lr_at(const OptimizerConfig& config, int step);

// Bias-corrected AdamW with decoupled weight decay. The schedule step is
// supplied by the caller; bias correction uses each parameter's own t.
// The pointer map defines the trainable set; tensors update in place.
void adamw_step(std::map<ParamName, Tensor*>& trainable, const GradMap& grads,
                OptimizerState& state, const OptimizerConfig& config, int step);

void adamw_step(ParamMap& params, const GradMap& grads, OptimizerState& state,
                const std::vector<ParamName>& trainable, const OptimizerConfig& config, int step);

}  // namespace modcomp
