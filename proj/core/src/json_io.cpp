#include "modcomp/json_io.hpp"

namespace modcomp {

using nlohmann::json;

void to_json(json& j, const ModelConfig& c) {
    j = json{{"n_layers", c.n_layers},     {"d_model", c.d_model},
             {"n_heads", c.n_heads},       {"d_ff", c.d_ff},
             {"vocab_size", c.vocab_size}, {"max_seq_len", c.max_seq_len},
             {"seed", c.seed}};
}

void from_json(const json& j, ModelConfig& c) {
    c.n_layers = j.value("n_layers", c.n_layers);
    c.d_model = j.value("d_model", c.d_model);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.d_ff = j.value("d_ff", c.d_ff);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
    c.seed = j.value("seed", c.seed);
}

void to_json(json& j, const OptimizerConfig& c) {
    j = json{{"lr", c.lr},
             {"beta1", c.beta1},
             {"beta2", c.beta2},
             {"eps", c.eps},
             {"weight_decay", c.weight_decay},
             {"warmup_steps", c.warmup_steps},
             {"max_grad_norm", c.max_grad_norm}};
}

void from_json(const json& j, OptimizerConfig& c) {
    c.lr = j.value("lr", c.lr);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.eps = j.value("eps", c.eps);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
}

void to_json(json& j, const AdapterConfig& c) {
    j = json{{"rank", c.rank},
             {"alpha", c.alpha},
             {"target_names", json::array()},
             {"seed", c.seed}};
    for (const auto& name : c.target_names) j["target_names"].push_back(name.str());
}

void from_json(const json& j, AdapterConfig& c) {
    c.rank = j.value("rank", c.rank);
    c.alpha = j.value("alpha", c.alpha);
    c.seed = j.value("seed", c.seed);
    if (j.contains("target_names")) {
        c.target_names.clear();
        for (const auto& s : j.at("target_names")) {
            c.target_names.push_back(ParamName::parse(s.get<std::string>()));
        }
    }
}

void to_json(json& j, const TrainConfig& c) {
    j = json{{"mode", train_mode_str(c.mode)},
             {"effective_batch_size", c.effective_batch_size},
             {"epochs", c.epochs},
             {"steps_per_switch", c.steps_per_switch},
             {"seed", c.seed},
             {"max_seq_len_train", c.max_seq_len_train},
             {"optim", c.optim},
             {"validate_every", c.validate_every}};
    switch (c.trainable_policy) {
        case TrainablePolicy::all: j["trainable_policy"] = "all"; break;
        case TrainablePolicy::lang_side: j["trainable_policy"] = "lang_side"; break;
        case TrainablePolicy::math_side: j["trainable_policy"] = "math_side"; break;
    }
    if (c.lora) j["lora"] = *c.lora;
}

void from_json(const json& j, TrainConfig& c) {
    c.mode = train_mode_parse(j.value("mode", "single"));
    c.effective_batch_size = j.value("effective_batch_size", c.effective_batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.steps_per_switch = j.value("steps_per_switch", c.steps_per_switch);
    c.seed = j.value("seed", c.seed);
    c.max_seq_len_train = j.value("max_seq_len_train", c.max_seq_len_train);
    if (j.contains("optim")) j.at("optim").get_to(c.optim);
    c.validate_every = j.value("validate_every", c.validate_every);
    const std::string policy = j.value("trainable_policy", "all");
    if (policy == "all") {
        c.trainable_policy = TrainablePolicy::all;
    } else if (policy == "lang_side") {
        c.trainable_policy = TrainablePolicy::lang_side;
    } else if (policy == "math_side") {
        c.trainable_policy = TrainablePolicy::math_side;
    } else {
        throw ConfigError("unknown trainable_policy: " + policy);
    }
    if (j.contains("lora") && !j.at("lora").is_null()) {
        c.lora = j.at("lora").get<AdapterConfig>();
    } else {
        c.lora.reset();
    }
}

}  // namespace modcomp
