#include "modcomp/partition.hpp"

#include "modcomp/error.hpp"

#include <nlohmann/json.hpp>

namespace modcomp {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Layer counts from the 32-layer layouts, scaled below 16 layers.
int scaled_count(int count_at_32, int n_layers) {
    if (n_layers >= 16) return count_at_32;
    return std::max(1, count_at_32 * n_layers / 32);
}

struct LayerRange {
    int bottom;  // layers [0, bottom) on the LANG side
    int top;     // layers [n_layers - top, n_layers) on the LANG side
};

LayerRange scheme_range(Scheme scheme, int n_layers) {
    int bottom32 = 0, top32 = 0;
    switch (scheme) {
        case Scheme::A: bottom32 = 6; top32 = 2; break;  // MLP-side range
        case Scheme::B: bottom32 = 8; top32 = 4; break;
        case Scheme::C: bottom32 = 6; top32 = 2; break;
        case Scheme::Z: bottom32 = 8; top32 = 4; break;  // complement of B's range
    }
    LayerRange r{scaled_count(bottom32, n_layers), scaled_count(top32, n_layers)};
    if (r.bottom + r.top >= n_layers) {
        throw ConfigError("scheme " + std::string(scheme_str(scheme)) + " needs more than " +
                          std::to_string(n_layers) + " layers");
    }
    return r;
}

}  // namespace

Side other_side(Side s) { return s == Side::LANG ? Side::MATH : Side::LANG; }

const char* side_str(Side s) { return s == Side::LANG ? "LANG" : "MATH"; }

Side side_parse(const std::string& s) {
    if (s == "LANG") return Side::LANG;
    if (s == "MATH") return Side::MATH;
    throw ConfigError("unknown side: " + s);
}

Scheme scheme_parse(const std::string& s) {
    if (s == "A") return Scheme::A;
    if (s == "B") return Scheme::B;
    if (s == "C") return Scheme::C;
    if (s == "Z") return Scheme::Z;
    throw ConfigError("unknown scheme: " + s);
}

const char* scheme_str(Scheme s) {
    switch (s) {
        case Scheme::A: return "A";
        case Scheme::B: return "B";
        case Scheme::C: return "C";
        case Scheme::Z: return "Z";
    }
    return "?";
}

std::vector<ParamName> PartitionSpec::side_names(Side side) const {
    std::vector<ParamName> names;
    for (const auto& [name, s] : assignment) {
        if (s == side) names.push_back(name);
    }
    return names;
}

PartitionSpec PartitionSpec::complement() const {
    PartitionSpec c;
    c.scheme_tag = scheme_tag;
    for (const auto& [name, s] : assignment) c.assignment[name] = other_side(s);
    return c;
}

std::string PartitionSpec::to_json() const {
    ordered_json doc;
    doc["scheme"] = scheme_tag;
    ordered_json assign = ordered_json::object();
    for (const auto& [name, side] : assignment) assign[name.str()] = side_str(side);
    doc["assignment"] = std::move(assign);
    return doc.dump(2);
}

PartitionSpec PartitionSpec::from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad partition JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("scheme") || !doc.contains("assignment")) {
        throw ConfigError("partition JSON needs 'scheme' and 'assignment'");
    }
    PartitionSpec spec;
    spec.scheme_tag = doc["scheme"].get<std::string>();
    for (const auto& [key, val] : doc["assignment"].items()) {
        spec.assignment[ParamName::parse(key)] = side_parse(val.get<std::string>());
    }
    return spec;
}

PartitionSpec allocate_scheme(Scheme scheme, const ModelConfig& config,
                              Side boundary_policy, bool z_complement) {
    config.validate();
    const LayerRange r = scheme_range(scheme, config.n_layers);
    PartitionSpec spec;
    spec.scheme_tag = scheme_str(scheme);
    for (const ParamName& name : registry_names(config)) {
        if (name.block != ParamName::Block::layer) {
            spec.assignment[name] = boundary_policy;
            continue;
        }
        bool lang_layer = name.layer < r.bottom || name.layer >= config.n_layers - r.top;
        if (scheme == Scheme::Z && z_complement) lang_layer = !lang_layer;
        Side side;
        if (scheme == Scheme::A) {
            // MHA everywhere on LANG; each norm scale follows the sublayer it feeds.
            const bool mha_side = name.group == ParamName::Group::mha ||
                                  (name.group == ParamName::Group::norm &&
                                   name.role == ParamName::Role::attn_scale);
            side = mha_side ? Side::LANG : (lang_layer ? Side::LANG : Side::MATH);
        } else {
            side = lang_layer ? Side::LANG : Side::MATH;
        }
        spec.assignment[name] = side;
    }
    return spec;
}

PartitionAudit validate_partition(const PartitionSpec& spec, const ModelParams& params) {
    PartitionAudit audit;
    const std::vector<ParamName> names = registry_names(params.config);
    std::map<ParamName, bool> seen;
    for (const ParamName& name : names) seen[name] = false;
    for (const auto& [name, side] : spec.assignment) {
        (void)side;
        auto it = seen.find(name);
        if (it == seen.end()) {
            audit.problems.push_back("unknown parameter: " + name.str());
        } else {
            it->second = true;
        }
    }
    for (const auto& [name, covered] : seen) {
        if (!covered) audit.problems.push_back("uncovered parameter: " + name.str());
    }
    return audit;
}

}  // namespace modcomp
