#include "modcomp/lora.hpp"

#include "modcomp/error.hpp"
#include "modcomp/hash.hpp"

#include <Eigen/Dense>

#include <random>

namespace modcomp {

namespace {

constexpr float kInitStd = 0.02f;

bool is_matrix_role(const ParamName& name) {
    using R = ParamName::Role;
    switch (name.role) {
        case R::q:
        case R::k:
        case R::v:
        case R::o:
        case R::gate:
        case R::up:
        case R::down:
            return true;
        default:
            return false;
    }
}

}  // namespace

void AdapterConfig::validate() const {
    if (rank < 1) throw ConfigError("adapter rank must be >= 1");
    if (alpha <= 0.0f) throw ConfigError("adapter alpha must be positive");
    if (target_names.empty()) throw ConfigError("adapter target set is empty");
}

const AdapterPair* AdapterSet::find(const ParamName& name) const {
    auto it = pairs.find(name);
    return it == pairs.end() ? nullptr : &it->second;
}

std::vector<ParamName> default_lora_targets(const ModelConfig& cfg) {
    std::vector<ParamName> targets;
    for (const ParamName& name : registry_names(cfg)) {
        if (name.block == ParamName::Block::layer && is_matrix_role(name)) targets.push_back(name);
    }
    return targets;
}

AdapterSet init_adapters(const AdapterConfig& config, const ModelParams& params) {
    config.validate();
    AdapterSet set;
    set.config = config;
    for (const ParamName& name : config.target_names) {
        auto it = params.weights.find(name);
        if (it == params.weights.end()) throw ConfigError("adapter target not in registry: " + name.str());
        if (it->second.rank() != 2 || !is_matrix_role(name)) {
            throw ConfigError("adapter target is not a matrix parameter: " + name.str());
        }
        const int d_out = it->second.rows();
        const int d_in = it->second.cols();
        AdapterPair pair;
        pair.a = Tensor({config.rank, d_in});
        pair.b = Tensor({d_out, config.rank});  // zero, so the initial delta vanishes
        const std::uint64_t h = fnv1a64(name.str() + ".lora_a");
        std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(h),
                          static_cast<std::uint32_t>(h >> 32)};
        std::mt19937 gen(seq);
        std::normal_distribution<float> dist(0.0f, kInitStd);
        for (std::int64_t i = 0; i < pair.a.size(); ++i) pair.a.at(i) = dist(gen);
        set.pairs.emplace(name, std::move(pair));
    }
    return set;
}

Tensor adapter_delta(const AdapterSet& set, const ParamName& name) {
    const AdapterPair* pair = set.pairs.count(name) ? &set.pairs.at(name) : nullptr;
    if (!pair) throw ConfigError("no adapter attached to " + name.str());
    const int d_out = pair->b.rows();
    const int rank = pair->b.cols();
    const int d_in = pair->a.cols();
    const double s = static_cast<double>(set.config.scale());
    // Double accumulation keeps the merged path close to the adapter path.
    Tensor delta({d_out, d_in});
    for (int i = 0; i < d_out; ++i) {
        for (int j = 0; j < d_in; ++j) {
            double acc = 0.0;
            for (int r = 0; r < rank; ++r) {
                acc += static_cast<double>(pair->b.at(i, r)) * pair->a.at(r, j);
            }
            delta.at(i, j) = static_cast<float>(s * acc);
        }
    }
    return delta;
}

ModelParams merge_adapters(const ModelParams& params, const AdapterSet& set) {
    ModelParams merged = params;
    for (const auto& [name, pair] : set.pairs) {
        (void)pair;
        auto it = merged.weights.find(name);
        if (it == merged.weights.end()) throw MergeError("adapter target missing from model: " + name.str());
        Tensor delta = adapter_delta(set, name);
        if (!it->second.same_shape(delta)) {
            throw MergeError("adapter delta shape drift for " + name.str() + ": " +
                             delta.shape_str() + " vs " + it->second.shape_str());
        }
        add_inplace(it->second, delta);
    }
    return merged;
}

}  // namespace modcomp
