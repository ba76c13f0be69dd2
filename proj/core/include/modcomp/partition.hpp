#pragma once

#include "modcomp/model.hpp"
#include "modcomp/param_name.hpp"

#include <map>
#include <string>
#include <vector>

namespace modcomp {

enum class Side { LANG, MATH };

Side other_side(Side s);
const char* side_str(Side s);
Side side_parse(const std::string& s);  // throws ConfigError

enum class Scheme { A, B, C, Z };

Scheme scheme_parse(const std::string& s);  // throws ConfigError
const char* scheme_str(Scheme s);

// Total two-way assignment of every registry name.
struct PartitionSpec {
    std::string scheme_tag = "custom";
    std::map<ParamName, Side> assignment;

    std::vector<ParamName> side_names(Side side) const;
    PartitionSpec complement() const;  // sides swapped, tag preserved

    std::string to_json() const;
    static PartitionSpec from_json(const std::string& text);  // throws ConfigError
};

// Scheme layouts at 32 layers, scaled proportionally below 16 layers
// (floor, min 1 layer per end):
//   A: every MHA matrix to LANG; MLP groups of the first 6 and last 2 layers
//      to LANG, the rest to MATH. attn-norm follows MHA, mlp-norm follows MLP.
//   B: layers 0..7 and the last 4 entirely LANG.
//   C: layers 0..5 and the last 2 entirely LANG.
//   Z: the layer-set complement of B (middle layers LANG). `z_complement`
//      false makes Z read identically to B instead.
// embed/unembed/final_norm always follow boundary_policy.
PartitionSpec allocate_scheme(Scheme scheme, const ModelConfig& config,
                              Side boundary_policy = Side::LANG, bool z_complement = true);

struct PartitionAudit {
    std::vector<std::string> problems;
    bool ok() const { return problems.empty(); }
};

// Checks totality and key agreement against the live registry.
PartitionAudit validate_partition(const PartitionSpec& spec, const ModelParams& params);

}  // namespace modcomp
