#include "modcomp/param_name.hpp"

#include "modcomp/error.hpp"

#include <tuple>

namespace modcomp {

namespace {

const char* role_str(ParamName::Role r) {
    switch (r) {
        case ParamName::Role::tok: return "tok";
        case ParamName::Role::proj: return "proj";
        case ParamName::Role::scale: return "scale";
        case ParamName::Role::q: return "q";
        case ParamName::Role::k: return "k";
        case ParamName::Role::v: return "v";
        case ParamName::Role::o: return "o";
        case ParamName::Role::gate: return "gate";
        case ParamName::Role::up: return "up";
        case ParamName::Role::down: return "down";
        case ParamName::Role::attn_scale: return "attn_scale";
        case ParamName::Role::mlp_scale: return "mlp_scale";
    }
    return "?";
}

// Position of a layer-local parameter in the canonical within-layer order.
int layer_slot(ParamName::Group g, ParamName::Role r) {
    using G = ParamName::Group;
    using R = ParamName::Role;
    if (g == G::norm && r == R::attn_scale) return 0;
    if (g == G::mha) {
        switch (r) {
            case R::q: return 1;
            case R::k: return 2;
            case R::v: return 3;
            case R::o: return 4;
            default: break;
        }
    }
    if (g == G::norm && r == R::mlp_scale) return 5;
    if (g == G::mlp) {
        switch (r) {
            case R::gate: return 6;
            case R::up: return 7;
            case R::down: return 8;
            default: break;
        }
    }
    return 9;
}

std::tuple<int, int, int, int> sort_key(const ParamName& p) {
    int b = 0;
    switch (p.block) {
        case ParamName::Block::embed: b = 0; break;
        case ParamName::Block::layer: b = 1; break;
        case ParamName::Block::final_norm: b = 2; break;
        case ParamName::Block::unembed: b = 3; break;
    }
    int slot = p.block == ParamName::Block::layer ? layer_slot(p.group, p.role) : 0;
    return {b, p.layer, slot, static_cast<int>(p.lora)};
}

}  // namespace

ParamName ParamName::embed_tok() {
    ParamName p;
    p.block = Block::embed;
    p.role = Role::tok;
    return p;
}

ParamName ParamName::unembed_proj() {
    ParamName p;
    p.block = Block::unembed;
    p.role = Role::proj;
    return p;
}

ParamName ParamName::final_norm_scale() {
    ParamName p;
    p.block = Block::final_norm;
    p.role = Role::scale;
    return p;
}

ParamName ParamName::layer_param(int layer, Group group, Role role) {
    if (layer < 0) throw ConfigError("layer index must be non-negative");
    if (layer_slot(group, role) > 8) {
        throw ConfigError("invalid layer parameter group/role combination");
    }
    ParamName p;
    p.block = Block::layer;
    p.layer = layer;
    p.group = group;
    p.role = role;
    return p;
}

ParamName ParamName::with_lora(LoraPart part) const {
    ParamName p = *this;
    p.lora = part;
    return p;
}

ParamName ParamName::base() const {
    ParamName p = *this;
    p.lora = LoraPart::none;
    return p;
}

std::string ParamName::str() const {
    std::string s;
    switch (block) {
        case Block::embed: s = "embed.tok"; break;
        case Block::unembed: s = "unembed.proj"; break;
        case Block::final_norm: s = "final_norm.scale"; break;
        case Block::layer: {
            const char* g = group == Group::mha ? "mha" : group == Group::mlp ? "mlp" : "norm";
            s = "layer." + std::to_string(layer) + "." + g + "." + role_str(role);
            break;
        }
    }
    if (lora == LoraPart::a) s += ".lora_a";
    if (lora == LoraPart::b) s += ".lora_b";
    return s;
}

ParamName ParamName::parse(const std::string& s) {
    std::string body = s;
    LoraPart part = LoraPart::none;
    auto strip_suffix = [&body](const std::string& suf) {
        if (body.size() > suf.size() && body.compare(body.size() - suf.size(), suf.size(), suf) == 0) {
            body.resize(body.size() - suf.size());
            return true;
        }
        return false;
    };
    if (strip_suffix(".lora_a")) part = LoraPart::a;
    else if (strip_suffix(".lora_b")) part = LoraPart::b;

    if (body == "embed.tok") return embed_tok().with_lora(part);
    if (body == "unembed.proj") return unembed_proj().with_lora(part);
    if (body == "final_norm.scale") return final_norm_scale().with_lora(part);

    // Remaining legal form: layer.<idx>.<group>.<role>
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        std::size_t dot = body.find('.', pos);
        if (dot == std::string::npos) dot = body.size();
        parts.push_back(body.substr(pos, dot - pos));
        pos = dot + 1;
    }
    if (parts.size() != 4 || parts[0] != "layer") {
        throw ConfigError("unparseable parameter name: " + s);
    }
    int layer = -1;
    try {
        std::size_t used = 0;
        layer = std::stoi(parts[1], &used);
        if (used != parts[1].size()) layer = -1;
    } catch (const std::exception&) {
        layer = -1;
    }
    if (layer < 0) throw ConfigError("bad layer index in parameter name: " + s);

    Group g;
    if (parts[2] == "mha") g = Group::mha;
    else if (parts[2] == "mlp") g = Group::mlp;
    else if (parts[2] == "norm") g = Group::norm;
    else throw ConfigError("unknown parameter group in: " + s);

    Role r;
    const std::string& rs = parts[3];
    if (rs == "q") r = Role::q;
    else if (rs == "k") r = Role::k;
    else if (rs == "v") r = Role::v;
    else if (rs == "o") r = Role::o;
    else if (rs == "gate") r = Role::gate;
    else if (rs == "up") r = Role::up;
    else if (rs == "down") r = Role::down;
    else if (rs == "attn_scale") r = Role::attn_scale;
    else if (rs == "mlp_scale") r = Role::mlp_scale;
    else throw ConfigError("unknown parameter role in: " + s);

    return layer_param(layer, g, r).with_lora(part);
}

bool ParamName::operator==(const ParamName& o) const {
    if (block != o.block || lora != o.lora) return false;
    if (block == Block::layer) {
        return layer == o.layer && group == o.group && role == o.role;
    }
    return true;
}

bool ParamName::operator<(const ParamName& o) const {
    return sort_key(*this) < sort_key(o);
}

}  // namespace modcomp
