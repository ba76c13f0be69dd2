#include "modcomp/merge.hpp"

#include "modcomp/error.hpp"

#include <nlohmann/json.hpp>

namespace modcomp {

namespace {

void check_same_registry(const ModelParams& a, const ModelParams& b, const char* what) {
    if (!(a.config == b.config)) throw MergeError(std::string(what) + ": model configs differ");
    if (a.weights.size() != b.weights.size()) {
        throw MergeError(std::string(what) + ": registries differ in size");
    }
}

float lambda_for(const std::map<ParamName, float>& lambdas, const ParamName& name) {
    auto it = lambdas.find(name);
    if (it == lambdas.end()) throw MergeError("no lambda for parameter " + name.str());
    return it->second;
}

}  // namespace

TaskVector task_vector(const ModelParams& base, const ModelParams& expert,
                       const std::string& base_id) {
    check_same_registry(base, expert, "task_vector");
    TaskVector tv;
    tv.base_id = base_id;
    for (const auto& [name, bw] : base.weights) {
        auto it = expert.weights.find(name);
        if (it == expert.weights.end()) throw MergeError("expert missing parameter " + name.str());
        const Tensor& ew = it->second;
        if (!bw.same_shape(ew)) throw MergeError("shape mismatch for " + name.str());
        Tensor delta = sub(ew, bw);
        std::vector<std::pair<std::int64_t, float>> fixes;
        for (std::int64_t i = 0; i < delta.size(); ++i) {
            if (bw.at(i) + delta.at(i) != ew.at(i)) fixes.emplace_back(i, ew.at(i));
        }
        tv.deltas.emplace(name, std::move(delta));
        if (!fixes.empty()) tv.corrections.emplace(name, std::move(fixes));
    }
    return tv;
}

ModelParams apply_task_vector(const ModelParams& base, const TaskVector& tv) {
    if (tv.deltas.size() != base.weights.size()) {
        throw MergeError("task vector does not match the base registry");
    }
    ModelParams out = base;
    for (auto& [name, w] : out.weights) {
        auto it = tv.deltas.find(name);
        if (it == tv.deltas.end()) throw MergeError("task vector missing " + name.str());
        add_inplace(w, it->second);
        auto fit = tv.corrections.find(name);
        if (fit != tv.corrections.end()) {
            for (const auto& [idx, value] : fit->second) w.at(idx) = value;
        }
    }
    return out;
}

std::string MergePlan::to_json() const {
    nlohmann::ordered_json doc;
    for (const auto& [side, label] : donor_of_side) doc["donors"][side_str(side)] = label;
    doc["partition"] = nlohmann::ordered_json::parse(spec.to_json());
    return doc.dump(2);
}

ModelParams layer_swap(const ModelParams& math_expert, const ModelParams& lang_expert,
                       const MergePlan& plan) {
    check_same_registry(math_expert, lang_expert, "layer_swap");
    ModelParams merged;
    merged.config = math_expert.config;
    for (const auto& [name, mw] : math_expert.weights) {
        auto sit = plan.spec.assignment.find(name);
        if (sit == plan.spec.assignment.end()) {
            throw MergeError("merge plan does not cover " + name.str());
        }
        const Tensor& donor = sit->second == Side::LANG ? lang_expert.weights.at(name) : mw;
        merged.weights.emplace(name, donor);
    }
    return merged;
}

AdapterSet lora_swap_merge(const AdapterSet& math_adapters, const AdapterSet& lang_adapters,
                           const MergePlan& plan) {
    if (math_adapters.config.rank != lang_adapters.config.rank ||
        math_adapters.config.alpha != lang_adapters.config.alpha) {
        throw MergeError("adapter sets disagree on rank/alpha");
    }
    if (math_adapters.pairs.size() != lang_adapters.pairs.size()) {
        throw MergeError("adapter sets target different names");
    }
    AdapterSet merged;
    merged.config = math_adapters.config;
    for (const auto& [name, math_pair] : math_adapters.pairs) {
        const AdapterPair* lang_pair = lang_adapters.find(name);
        if (!lang_pair) throw MergeError("adapter sets target different names: " + name.str());
        auto sit = plan.spec.assignment.find(name);
        if (sit == plan.spec.assignment.end()) {
            throw MergeError("merge plan does not cover " + name.str());
        }
        merged.pairs.emplace(name, sit->second == Side::LANG ? *lang_pair : math_pair);
    }
    return merged;
}

ModelParams revert(const ModelParams& expert, const ModelParams& base,
                   const std::vector<ParamName>& subset) {
    check_same_registry(expert, base, "revert");
    ModelParams out = expert;
    for (const ParamName& name : subset) {
        auto it = out.weights.find(name);
        if (it == out.weights.end()) throw MergeError("unknown parameter in revert subset: " + name.str());
        it->second = base.weights.at(name);
    }
    return out;
}

ModelParams interpolate_blockwise(const ModelParams& base, const TaskVector& tv,
                                  const std::map<ParamName, float>& lambdas,
                                  bool allow_extrapolation) {
    if (tv.deltas.size() != base.weights.size()) {
        throw MergeError("task vector does not match the base registry");
    }
    ModelParams out = base;
    for (auto& [name, w] : out.weights) {
        const float lambda = lambda_for(lambdas, name);
        if (!allow_extrapolation && (lambda < 0.0f || lambda > 1.0f)) {
            throw MergeError("lambda outside [0, 1] for " + name.str() +
                             " (pass allow_extrapolation to permit)");
        }
        axpy_inplace(w, lambda, tv.deltas.at(name));
    }
    return out;
}

ModelParams interpolate_blockwise(const ModelParams& base, const TaskVector& tv, float lambda,
                                  bool allow_extrapolation) {
    std::map<ParamName, float> lambdas;
    for (const auto& [name, delta] : tv.deltas) {
        (void)delta;
        lambdas[name] = lambda;
    }
    return interpolate_blockwise(base, tv, lambdas, allow_extrapolation);
}

}  // namespace modcomp
