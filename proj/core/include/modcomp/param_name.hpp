#pragma once

#include "modcomp/tensor.hpp"

#include <map>
#include <string>

namespace modcomp {

// Structured parameter identifier. The canonical string form is dot separated,
// e.g. "embed.tok", "layer.3.mha.q", "layer.3.norm.attn_scale", "unembed.proj".
// LoRA factors append ".lora_a" / ".lora_b" to the wrapped weight's name.
struct ParamName {
    enum class Block { embed, layer, final_norm, unembed };
    enum class Group { none, mha, mlp, norm };
    enum class Role { tok, proj, scale, q, k, v, o, gate, up, down, attn_scale, mlp_scale };
    enum class LoraPart { none, a, b };

    Block block = Block::embed;
    int layer = -1;  // only meaningful for Block::layer
    Group group = Group::none;
    Role role = Role::tok;
    LoraPart lora = LoraPart::none;

    static ParamName embed_tok();
    static ParamName unembed_proj();
    static ParamName final_norm_scale();
    static ParamName layer_param(int layer, Group group, Role role);

    ParamName with_lora(LoraPart part) const;
    ParamName base() const;  // same name with lora stripped

    std::string str() const;
    static ParamName parse(const std::string& s);  // throws ConfigError on malformed input

    bool operator==(const ParamName& o) const;
    bool operator!=(const ParamName& o) const { return !(*this == o); }
    // Canonical manifest order: embed, layers in index order, final_norm, unembed.
    // Within a layer: norm.attn_scale, mha.{q,k,v,o}, norm.mlp_scale, mlp.{gate,up,down}.
    bool operator<(const ParamName& o) const;
};

using ParamMap = std::map<ParamName, Tensor>;
using GradMap = std::map<ParamName, Tensor>;

}  // namespace modcomp
