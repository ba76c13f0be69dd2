#include "modcomp/optimizer.hpp"

#include "modcomp/error.hpp"

#include <cmath>

namespace modcomp {

void OptimizerConfig::validate() const {
    if (lr <= 0.0f) throw ConfigError("lr must be positive");
    if (beta1 < 0.0f || beta1 >= 1.0f || beta2 < 0.0f || beta2 >= 1.0f) {
        throw ConfigError("betas must lie in [0, 1)");
    }
    if (eps <= 0.0f) throw ConfigError("eps must be positive");
    if (weight_decay < 0.0f) throw ConfigError("weight_decay must be non-negative");
    if (warmup_steps < 0) throw ConfigError("warmup_steps must be non-negative");
    if (max_grad_norm <= 0.0f) throw ConfigError("max_grad_norm must be positive");
}

double clip_global_norm(GradMap& grads, float max_norm) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) {
        for (std::int64_t i = 0; i < g.size(); ++i) {
            const float x = g.at(i);
            if (!std::isfinite(x)) throw NumericError("non-finite gradient in " + name.str());
            sq += static_cast<double>(x) * x;
        }
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const float s = static_cast<float>(max_norm / norm);
        for (auto& [name, g] : grads) {
            (void)name;
            for (std::int64_t i = 0; i < g.size(); ++i) g.at(i) *= s;
        }
    }
    return norm;
}

float lr_at(const OptimizerConfig& config, int step) {
    if (step < 0) throw ConfigError("schedule step must be non-negative");
    if (config.warmup_steps > 0 && step < config.warmup_steps) {
        return config.lr * static_cast<float>(step) / static_cast<float>(config.warmup_steps);
    }
    return config.lr;
}

void adamw_step(std::map<ParamName, Tensor*>& trainable, const GradMap& grads,
                OptimizerState& state, const OptimizerConfig& config, int step) {
    const float lr = lr_at(config, step);
    for (auto& [name, wp] : trainable) {
        auto git = grads.find(name);
        if (git == grads.end()) throw TrainError("no gradient for trainable parameter " + name.str());
        const Tensor& g = git->second;
        Tensor& w = *wp;
        if (!w.same_shape(g)) {
            throw TrainError("gradient shape mismatch for " + name.str() + ": " + w.shape_str() +
                             " vs " + g.shape_str());
        }
        MomentEntry& me = state.moments[name];
        if (me.t == 0 && me.m.size() == 0) {
            me.m = Tensor(w.shape());
            me.v = Tensor(w.shape());
        }
        me.t += 1;
        const float bc1 = 1.0f - std::pow(config.beta1, static_cast<float>(me.t));
        const float bc2 = 1.0f - std::pow(config.beta2, static_cast<float>(me.t));
        for (std::int64_t i = 0; i < w.size(); ++i) {
            const float gi = g.at(i);
            float& m = me.m.at(i);
            float& v = me.v.at(i);
            m = config.beta1 * m + (1.0f - config.beta1) * gi;
            v = config.beta2 * v + (1.0f - config.beta2) * gi * gi;
            const float mhat = m / bc1;
            const float vhat = v / bc2;
            w.at(i) -= lr * (mhat / (std::sqrt(vhat) + config.eps) + config.weight_decay * w.at(i));
        }
    }
    state.global_step += 1;
}

void adamw_step(ParamMap& params, const GradMap& grads, OptimizerState& state,
                const std::vector<ParamName>& trainable, const OptimizerConfig& config, int step) {
    std::map<ParamName, Tensor*> ptrs;
    for (const ParamName& name : trainable) {
        auto it = params.find(name);
        if (it == params.end()) throw TrainError("trainable name not in params: " + name.str());
        ptrs[name] = &it->second;
    }
    adamw_step(ptrs, grads, state, config, step);
}

}  // namespace modcomp
