#pragma once

#include "modcomp/lora.hpp"
#include "modcomp/model.hpp"
#include "modcomp/partition.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace modcomp {

// Per-parameter expert - base. Float subtraction loses bits, so coordinates
// where base + delta fails to reproduce the expert carry exact corrections;
// apply() uses them, interpolation does not.
struct TaskVector {
    std::string base_id;
    std::map<ParamName, Tensor> deltas;
    std::map<ParamName, std::vector<std::pair<std::int64_t, float>>> corrections;
};

TaskVector task_vector(const ModelParams& base, const ModelParams& expert,
                       const std::string& base_id = "");

// Reconstructs the expert bit-exactly.
ModelParams apply_task_vector(const ModelParams& base, const TaskVector& tv);

struct MergePlan {
    PartitionSpec spec;
    std::map<Side, std::string> donor_of_side;  // metadata: side -> expert label

    std::string to_json() const;
};

// Pure per-name selection: LANG names copied from the language expert, MATH
// names from the math expert. No arithmetic blending.
ModelParams layer_swap(const ModelParams& math_expert, const ModelParams& lang_expert,
                       const MergePlan& plan);

// Adapter-space analog: each target's (A, B) pair comes from its side's donor.
AdapterSet lora_swap_merge(const AdapterSet& math_adapters, const AdapterSet& lang_adapters,
                           const MergePlan& plan);

// Names in subset reset bit-exactly to base; the rest keep expert values.
ModelParams revert(const ModelParams& expert, const ModelParams& base,
                   const std::vector<ParamName>& subset);

// base + lambda * delta per name, plain f32. Lambdas outside [0, 1] are
// rejected unless allow_extrapolation is set.
ModelParams interpolate_blockwise(const ModelParams& base, const TaskVector& tv,
                                  const std::map<ParamName, float>& lambdas,
                                  bool allow_extrapolation = false);
ModelParams interpolate_blockwise(const ModelParams& base, const TaskVector& tv, float lambda,
                                  bool allow_extrapolation = false);

}  // namespace modcomp
