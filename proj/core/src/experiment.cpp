#include "modcomp/experiment.hpp"

#include "modcomp/checkpoint.hpp"
#include "modcomp/error.hpp"
#include "modcomp/hash.hpp"
#include "modcomp/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

namespace modcomp {

namespace fs = std::filesystem;
using nlohmann::json;

int fold_seed(int seed, const std::string& tag) {
    const std::uint64_t h = fnv1a64(tag) ^ static_cast<std::uint32_t>(seed);
    return static_cast<int>(h & 0x7fffffff);
}

namespace {

void prepare_dir(const fs::path& dir, bool overwrite) {
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        if (!overwrite) {
            throw ConfigError("output dir exists and is not empty (pass overwrite): " +
                              dir.string());
        }
        fs::remove_all(dir);
    }
    fs::create_directories(dir);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StatsError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string dump2(const json& j) { return j.dump(2); }

std::string ckpt_hash(const fs::path& path) {
    return read_checkpoint_info(path.string()).content_hash;
}

std::string block_label(int seed, int cipher_seed) {
    return "s" + std::to_string(seed) + "-c" + std::to_string(cipher_seed);
}

double median(std::vector<double> v) {
    if (v.empty()) throw StatsError("median of empty vector");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}


Side section_side(const std::string& s) { return side_parse(s); }

}  // namespace

const std::vector<std::string> kRunTreatments = {
    "base",     "math_only",    "lang_only",  "partial_math", "partial_lang",
    "data_mix", "simultaneous", "layer_swap", "partial_swap"};

const std::vector<std::string> kSuiteTreatments = {"math_only",    "lang_only",  "data_mix",
                                                   "simultaneous", "layer_swap", "partial_swap"};

void DataConfig::validate() const {
    if (train_per_dataset < 1) throw ConfigError("train_per_dataset must be >= 1");
    if (val_per_dataset < 1) throw ConfigError("val_per_dataset must be >= 1");
    if (eval_items < 1) throw ConfigError("eval_items must be >= 1");
}

void to_json(json& j, const DataConfig& c) {
    j = json{{"train_per_dataset", c.train_per_dataset},
             {"val_per_dataset", c.val_per_dataset},
             {"eval_items", c.eval_items},
             {"cipher_seed", c.cipher_seed},
             {"identity_cipher", c.identity_cipher}};
}

void from_json(const json& j, DataConfig& c) {
    c.train_per_dataset = j.value("train_per_dataset", c.train_per_dataset);
    c.val_per_dataset = j.value("val_per_dataset", c.val_per_dataset);
    c.eval_items = j.value("eval_items", c.eval_items);
    c.cipher_seed = j.value("cipher_seed", c.cipher_seed);
    c.identity_cipher = j.value("identity_cipher", c.identity_cipher);
}

void to_json(json& j, const PartitionSection& c) {
    j = json{{"scheme", scheme_str(c.scheme)},
             {"boundary_policy", side_str(c.boundary_policy)},
             {"z_complement", c.z_complement}};
}

void from_json(const json& j, PartitionSection& c) {
    c.scheme = scheme_parse(j.value("scheme", "C"));
    c.boundary_policy = section_side(j.value("boundary_policy", "LANG"));
    c.z_complement = j.value("z_complement", true);
}

void to_json(json& j, const MergeSection& c) {
    j = json{{"kind", c.kind},
             {"math_expert", c.math_expert},
             {"lang_expert", c.lang_expert},
             {"revert_side", side_str(c.revert_side)},
             {"lambda", c.lam}};
}

void from_json(const json& j, MergeSection& c) {
    c.kind = j.value("kind", "layer_swap");
    c.math_expert = j.value("math_expert", "");
    c.lang_expert = j.value("lang_expert", "");
    c.revert_side = section_side(j.value("revert_side", "LANG"));
    c.lam = j.value("lambda", 1.0f);
}

void to_json(json& j, const EvalSection& c) {
    j = json{{"n_shot", c.n_shot}, {"splits", c.splits}, {"include_items", c.include_items}};
}

void from_json(const json& j, EvalSection& c) {
    c.n_shot = j.value("n_shot", c.n_shot);
    c.splits = j.value("splits", c.splits);
    c.include_items = j.value("include_items", c.include_items);
}

void ExperimentConfig::validate() const {
    if (name.empty()) throw ConfigError("experiment name must be non-empty");
    if (output_dir.empty()) throw ConfigError("output_dir must be non-empty");
    if (std::find(kRunTreatments.begin(), kRunTreatments.end(), treatment) ==
        kRunTreatments.end()) {
        throw ConfigError("unknown treatment: " + treatment);
    }
    model.validate();
    data.validate();
    training.validate();
    if (eval.n_shot < 0) throw ConfigError("n_shot must be >= 0");
    if (eval.splits.empty()) throw ConfigError("eval.splits must be non-empty");
    for (const auto& s : eval.splits) {
        if (s != "source" && s != "target") throw ConfigError("unknown eval split: " + s);
    }
    // Scheme must fit the layer count.
    allocate_scheme(partition.scheme, model, partition.boundary_policy, partition.z_complement);
    if (treatment == "simultaneous" && training.lora) {
        throw ConfigError("simultaneous training does not support adapters");
    }
    const bool swap_treatment = treatment == "layer_swap" || treatment == "partial_swap";
    if (merge) {
        if (merge->kind != "layer_swap" && merge->kind != "revert" && merge->kind != "interpolate") {
            throw ConfigError("unknown merge kind: " + merge->kind);
        }
        if (swap_treatment && merge->kind != "layer_swap") {
            throw ConfigError("treatment " + treatment + " implies a layer_swap merge");
        }
        if (merge->kind == "layer_swap" && !swap_treatment) {
            if (merge->math_expert.empty() || merge->lang_expert.empty()) {
                throw ConfigError("layer_swap merge outside a swap treatment needs both expert paths");
            }
        }
        if (merge->kind == "interpolate" && !(merge->lam >= 0.0f && merge->lam <= 1.0f)) {
            throw ConfigError("interpolation lambda must lie in [0, 1]");
        }
        if (merge->kind != "layer_swap" && treatment == "base" && base_checkpoint.empty()) {
            throw ConfigError("merge kind " + merge->kind + " needs a trained model");
        }
    }
}

std::uint64_t ExperimentConfig::config_hash() const {
    json j = *this;
    return fnv1a64(j.dump());
}

void to_json(json& j, const ExperimentConfig& c) {
    j = json{{"name", c.name},
             {"treatment", c.treatment},
             {"seed", c.seed},
             {"seed_source", c.seed_source},
             {"model", c.model},
             {"data", c.data},
             {"training", c.training},
             {"partition", c.partition},
             {"eval", c.eval},
             {"base_checkpoint", c.base_checkpoint},
             {"output_dir", c.output_dir},
             {"overwrite", c.overwrite}};
    if (c.merge) j["merge"] = *c.merge;
}

void from_json(const json& j, ExperimentConfig& c) {
    c.name = j.value("name", c.name);
    c.treatment = j.value("treatment", c.treatment);
    c.seed = j.value("seed", c.seed);
    c.seed_source = j.value("seed_source", c.seed_source);
    if (j.contains("model")) j.at("model").get_to(c.model);
    if (j.contains("data")) j.at("data").get_to(c.data);
    if (j.contains("training")) j.at("training").get_to(c.training);
    if (j.contains("partition")) j.at("partition").get_to(c.partition);
    if (j.contains("eval")) j.at("eval").get_to(c.eval);
    if (j.contains("merge") && !j.at("merge").is_null()) {
        c.merge = j.at("merge").get<MergeSection>();
    } else {
        c.merge.reset();
    }
    c.base_checkpoint = j.value("base_checkpoint", c.base_checkpoint);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.overwrite = j.value("overwrite", c.overwrite);
}

namespace {

struct Corpora {
    Vocab vocab;
    Cipher cipher;
    Dataset math_train, lang_train;
    Dataset math_val, lang_val;
    Dataset eval_src, eval_tgt;
};

Corpora generate_corpora(const DataConfig& d, int seed) {
    Corpora c;
    auto [vocab, cipher] = build_vocab_cipher(d.cipher_seed, d.identity_cipher);
    c.vocab = std::move(vocab);
    c.cipher = std::move(cipher);
    c.math_train = gen_math_corpus(d.train_per_dataset, fold_seed(seed, "math-train"));
    c.lang_train = gen_language_corpus(d.train_per_dataset, fold_seed(seed, "lang-train"), c.cipher);
    c.math_val = gen_math_corpus(d.val_per_dataset, fold_seed(seed, "math-val"));
    c.lang_val = gen_language_corpus(d.val_per_dataset, fold_seed(seed, "lang-val"), c.cipher);
    auto [src, tgt] = gen_eval_sets(d.eval_items, fold_seed(seed, "eval"), c.cipher);
    c.eval_src = std::move(src);
    c.eval_tgt = std::move(tgt);
    return c;
}

void save_corpora(const Corpora& c, const fs::path& dir) {
    fs::create_directories(dir);
    save_dataset_jsonl(c.math_train, (dir / "math_train.jsonl").string());
    save_dataset_jsonl(c.lang_train, (dir / "lang_train.jsonl").string());
    save_dataset_jsonl(c.math_val, (dir / "math_val.jsonl").string());
    save_dataset_jsonl(c.lang_val, (dir / "lang_val.jsonl").string());
    save_dataset_jsonl(c.eval_src, (dir / "eval_source.jsonl").string());
    save_dataset_jsonl(c.eval_tgt, (dir / "eval_target.jsonl").string());
}

json val_metrics(const TrainReport& r) {
    return json{{"start_val_loss", r.start_val_loss()},
                {"end_val_loss", r.end_val_loss()},
                {"steps", r.steps}};
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    cfg.validate();
    cfg.model.seed = cfg.seed;
    cfg.training.seed = fold_seed(cfg.seed, "train");

    const fs::path dir(cfg.output_dir);
    prepare_dir(dir, cfg.overwrite);

    json summary;
    summary["name"] = cfg.name;
    summary["treatment"] = cfg.treatment;
    summary["seed"] = cfg.seed;
    summary["seed_source"] = cfg.seed_source;
    summary["block"] = block_label(cfg.seed, cfg.data.cipher_seed);
    summary["cipher_seed"] = cfg.data.cipher_seed;
    summary["config_hash"] = fnv_hex(cfg.config_hash());
    summary["template_version"] = kFewshotTemplateVersion;

    std::string stage = "setup";
    try {
        write_text(dir / "config.json", dump2(json(cfg)));

        stage = "generate";
        Corpora corpora = generate_corpora(cfg.data, cfg.seed);
        save_corpora(corpora, dir / "datasets");
        summary["datasets"] = {{"math_train", corpora.math_train.size()},
                               {"lang_train", corpora.lang_train.size()},
                               {"math_val", corpora.math_val.size()},
                               {"lang_val", corpora.lang_val.size()},
                               {"eval_items", corpora.eval_src.size()}};

        stage = "train";
        json consumed = json::object();
        json produced = json::object();
        ModelParams base;
        if (!cfg.base_checkpoint.empty()) {
            base = load_model_checkpoint(cfg.base_checkpoint);
            if (!(base.config == cfg.model)) {
                throw ConfigError("base checkpoint config does not match the experiment model");
            }
            consumed[cfg.base_checkpoint] = ckpt_hash(cfg.base_checkpoint);
        } else {
            base = init_model(cfg.model);
        }
        save_model_checkpoint(base, (dir / "base.ckpt").string());
        produced["base.ckpt"] = ckpt_hash(dir / "base.ckpt");

        const PartitionSpec spec = allocate_scheme(cfg.partition.scheme, cfg.model,
                                                   cfg.partition.boundary_policy,
                                                   cfg.partition.z_complement);
        write_text(dir / "partition.json", spec.to_json());
        summary["partition"] = {{"scheme", spec.scheme_tag},
                                {"lang_params", spec.side_names(Side::LANG).size()},
                                {"math_params", spec.side_names(Side::MATH).size()}};

        const Dataset blended_val = blend_valsets(corpora.lang_val, corpora.math_val);
        const std::string& t = cfg.treatment;
        const bool swap_treatment = t == "layer_swap" || t == "partial_swap";

        ModelParams final_model = base;
        std::optional<AdapterSet> final_adapters;
        std::optional<ModelParams> math_expert, lang_expert;
        std::optional<AdapterSet> math_adapters, lang_adapters;
        json train_summaries = json::object();

        const auto run_single = [&](ModelParams& m, const Dataset& ds, const Dataset& vs,
                                    std::optional<Side> side, const std::string& tag,
                                    std::optional<AdapterSet>& adapters_out) {
            TrainConfig tc = cfg.training;
            tc.mode = TrainMode::single;
            tc.seed = fold_seed(cfg.seed, "train-" + tag);
            std::optional<PartitionSpec> sp;
            if (side) sp = spec;
            AdapterSet adapters;
            TrainReport r = train_single(m, ds, sp, side, tc, &vs,
                                         tc.lora ? &adapters : nullptr);
            if (tc.lora) adapters_out = std::move(adapters);
            write_text(dir / (tag + "_train_report.json"), r.to_json());
            train_summaries[tag] = val_metrics(r);
            return r;
        };

        if (t == "base") {
            // nothing to train
        } else if (t == "math_only" || t == "partial_math") {
            run_single(final_model, corpora.math_train, corpora.math_val,
                       t == "partial_math" ? std::optional<Side>(Side::MATH) : std::nullopt,
                       "math", final_adapters);
        } else if (t == "lang_only" || t == "partial_lang") {
            run_single(final_model, corpora.lang_train, corpora.lang_val,
                       t == "partial_lang" ? std::optional<Side>(Side::LANG) : std::nullopt,
                       "lang", final_adapters);
        } else if (t == "data_mix") {
            TrainConfig tc = cfg.training;
            tc.mode = TrainMode::mixed;
            TrainReport r = train_mixed(final_model, corpora.lang_train, corpora.math_train, tc,
                                        &blended_val);
            write_text(dir / "train_report.json", r.to_json());
            train_summaries["mix"] = val_metrics(r);
        } else if (t == "simultaneous") {
            TrainConfig tc = cfg.training;
            tc.mode = TrainMode::simultaneous;
            TrainReport r = train_simultaneous(final_model, corpora.lang_train,
                                               corpora.math_train, spec, tc, &blended_val);
            write_text(dir / "train_report.json", r.to_json());
            train_summaries["simultaneous"] = val_metrics(r);
        } else if (swap_treatment) {
            const bool partial = t == "partial_swap";
            const std::string ext_math = cfg.merge ? cfg.merge->math_expert : "";
            const std::string ext_lang = cfg.merge ? cfg.merge->lang_expert : "";
            if (!ext_math.empty()) {
                math_expert = load_model_checkpoint(ext_math);
                if (!(math_expert->config == cfg.model)) {
                    throw ConfigError("math expert config mismatch: " + ext_math);
                }
                consumed[ext_math] = ckpt_hash(ext_math);
            } else {
                math_expert = base;
                run_single(*math_expert, corpora.math_train, corpora.math_val,
                           partial ? std::optional<Side>(Side::MATH) : std::nullopt, "math",
                           math_adapters);
                if (!cfg.training.lora) {
                    save_model_checkpoint(*math_expert, (dir / "math_expert.ckpt").string());
                    produced["math_expert.ckpt"] = ckpt_hash(dir / "math_expert.ckpt");
                } else {
                    save_adapter_checkpoint(*math_adapters, cfg.model,
                                            (dir / "math_expert_lora.ckpt").string());
                    produced["math_expert_lora.ckpt"] = ckpt_hash(dir / "math_expert_lora.ckpt");
                }
            }
            if (!ext_lang.empty()) {
                lang_expert = load_model_checkpoint(ext_lang);
                if (!(lang_expert->config == cfg.model)) {
                    throw ConfigError("lang expert config mismatch: " + ext_lang);
                }
                consumed[ext_lang] = ckpt_hash(ext_lang);
            } else {
                lang_expert = base;
                run_single(*lang_expert, corpora.lang_train, corpora.lang_val,
                           partial ? std::optional<Side>(Side::LANG) : std::nullopt, "lang",
                           lang_adapters);
                if (!cfg.training.lora) {
                    save_model_checkpoint(*lang_expert, (dir / "lang_expert.ckpt").string());
                    produced["lang_expert.ckpt"] = ckpt_hash(dir / "lang_expert.ckpt");
                } else {
                    save_adapter_checkpoint(*lang_adapters, cfg.model,
                                            (dir / "lang_expert_lora.ckpt").string());
                    produced["lang_expert_lora.ckpt"] = ckpt_hash(dir / "lang_expert_lora.ckpt");
                }
            }
        }
        summary["training"] = train_summaries;

        stage = "merge";
        const bool explicit_swap =
            cfg.merge && cfg.merge->kind == "layer_swap" && !swap_treatment;
        if (explicit_swap) {
            math_expert = load_model_checkpoint(cfg.merge->math_expert);
            lang_expert = load_model_checkpoint(cfg.merge->lang_expert);
            if (!(math_expert->config == cfg.model) || !(lang_expert->config == cfg.model)) {
                throw ConfigError("merge expert config mismatch");
            }
            consumed[cfg.merge->math_expert] = ckpt_hash(cfg.merge->math_expert);
            consumed[cfg.merge->lang_expert] = ckpt_hash(cfg.merge->lang_expert);
        }
        if (swap_treatment || explicit_swap) {
            MergePlan plan;
            plan.spec = spec;
            plan.donor_of_side = {{Side::MATH, "math_expert"}, {Side::LANG, "lang_expert"}};
            write_text(dir / "merge_plan.json", plan.to_json());
            if (cfg.training.lora && swap_treatment && math_adapters && lang_adapters) {
                final_adapters = lora_swap_merge(*math_adapters, *lang_adapters, plan);
                final_model = base;
            } else {
                final_model = layer_swap(*math_expert, *lang_expert, plan);
            }
            summary["merge"] = {{"kind", "layer_swap"}, {"scheme", spec.scheme_tag}};
        } else if (cfg.merge && cfg.merge->kind == "revert") {
            final_model = revert(final_model, base, spec.side_names(cfg.merge->revert_side));
            summary["merge"] = {{"kind", "revert"},
                                {"side", side_str(cfg.merge->revert_side)},
                                {"scheme", spec.scheme_tag}};
        } else if (cfg.merge && cfg.merge->kind == "interpolate") {
            const TaskVector tv = task_vector(base, final_model, "base.ckpt");
            final_model = interpolate_blockwise(base, tv, cfg.merge->lam);
            summary["merge"] = {{"kind", "interpolate"}, {"lambda", cfg.merge->lam}};
        }

        if (final_adapters) {
            save_adapter_checkpoint(*final_adapters, cfg.model, (dir / "final_lora.ckpt").string());
            produced["final_lora.ckpt"] = ckpt_hash(dir / "final_lora.ckpt");
        }
        save_model_checkpoint(final_model, (dir / "final.ckpt").string());
        produced["final.ckpt"] = ckpt_hash(dir / "final.ckpt");
        summary["checkpoints"] = {{"consumed", consumed}, {"produced", produced}};

        stage = "eval";
        json em = json::object();
        for (const auto& split : cfg.eval.splits) {
            const Dataset& set = split == "source" ? corpora.eval_src : corpora.eval_tgt;
            EvalReport report = exact_match_eval(final_model, set, cfg.eval.n_shot,
                                                 final_adapters ? &*final_adapters : nullptr);
            report.split = split;
            write_text(dir / ("eval_" + split + ".json"), report.to_json(cfg.eval.include_items));
            em[split] = report.em_accuracy;
        }
        summary["metrics"] = {{"em", em}};

        stage = "report";
        summary["status"] = "ok";
        write_text(dir / "summary.json", dump2(summary));
        return {dir.string(), summary};
    } catch (const std::exception& ex) {
        json err;
        err["name"] = cfg.name;
        err["treatment"] = cfg.treatment;
        err["status"] = "error";
        err["stage"] = stage;
        err["error"] = ex.what();
        err["error_class"] = error_class(ex);
        err["config_hash"] = fnv_hex(cfg.config_hash());
        write_text(dir / "summary.json", dump2(err));
        throw;
    }
}

const char* error_class(const std::exception& ex) {
    if (dynamic_cast<const ConfigError*>(&ex)) return "config";
    if (dynamic_cast<const CheckpointError*>(&ex)) return "data";
    if (dynamic_cast<const DataError*>(&ex)) return "data";
    if (dynamic_cast<const TrainError*>(&ex)) return "train";
    if (dynamic_cast<const NumericError*>(&ex)) return "train";
    if (dynamic_cast<const ShapeError*>(&ex)) return "train";
    if (dynamic_cast<const MergeError*>(&ex)) return "merge";
    if (dynamic_cast<const EvalError*>(&ex)) return "eval";
    if (dynamic_cast<const StatsError*>(&ex)) return "eval";
    return "other";
}

void SuiteConfig::validate() const {
    model.validate();
    data.validate();
    pretrain.validate();
    sft.validate();
    if (seeds.empty()) throw ConfigError("suite needs at least one seed");
    if (cipher_seeds.empty()) throw ConfigError("suite needs at least one cipher seed");
    if (eval.n_shot < 0) throw ConfigError("n_shot must be >= 0");
    if (output_dir.empty()) throw ConfigError("output_dir must be non-empty");
    allocate_scheme(partition.scheme, model, partition.boundary_policy, partition.z_complement);
    for (float l : lambdas) {
        if (!(l >= 0.0f && l <= 1.0f)) throw ConfigError("lambda grid must lie in [0, 1]");
    }
}

void to_json(json& j, const SuiteConfig& c) {
    j = json{{"model", c.model},
             {"data", c.data},
             {"pretrain", c.pretrain},
             {"sft", c.sft},
             {"partition", c.partition},
             {"seeds", c.seeds},
             {"cipher_seeds", c.cipher_seeds},
             {"seed_source", c.seed_source},
             {"eval", c.eval},
             {"source_evals", c.source_evals},
             {"revert_harness", c.revert_harness},
             {"lambda_grid", c.lambda_grid},
             {"lambdas", c.lambdas},
             {"output_dir", c.output_dir},
             {"overwrite", c.overwrite}};
}

void from_json(const json& j, SuiteConfig& c) {
    if (j.contains("model")) j.at("model").get_to(c.model);
    if (j.contains("data")) j.at("data").get_to(c.data);
    if (j.contains("pretrain")) j.at("pretrain").get_to(c.pretrain);
    if (j.contains("sft")) j.at("sft").get_to(c.sft);
    if (j.contains("partition")) j.at("partition").get_to(c.partition);
    c.seeds = j.value("seeds", c.seeds);
    c.cipher_seeds = j.value("cipher_seeds", c.cipher_seeds);
    c.seed_source = j.value("seed_source", c.seed_source);
    if (j.contains("eval")) j.at("eval").get_to(c.eval);
    c.source_evals = j.value("source_evals", c.source_evals);
    c.revert_harness = j.value("revert_harness", c.revert_harness);
    c.lambda_grid = j.value("lambda_grid", c.lambda_grid);
    c.lambdas = j.value("lambdas", c.lambdas);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.overwrite = j.value("overwrite", c.overwrite);
}

SuiteConfig suite_default_config() {
    SuiteConfig cfg;
    cfg.model.n_layers = 4;
    cfg.model.d_model = 48;
    cfg.model.n_heads = 4;
    cfg.model.d_ff = 144;
    cfg.model.vocab_size = 64;
    cfg.model.max_seq_len = 80;

    cfg.data.train_per_dataset = 8000;
    cfg.data.val_per_dataset = 200;
    cfg.data.eval_items = 500;

    cfg.pretrain.mode = TrainMode::mixed;
    cfg.pretrain.epochs = 8;
    cfg.pretrain.effective_batch_size = 16;
    cfg.pretrain.optim.lr = 1e-3f;
    cfg.pretrain.optim.warmup_steps = 100;
    cfg.pretrain.validate_every = 200;

    // Expert SFT stays gentle so the experts remain close to the shared base;
    // merges of far-drifted experts produce degenerate decoders.
    cfg.sft.mode = TrainMode::single;
    cfg.sft.epochs = 1;
    cfg.sft.effective_batch_size = 16;
    cfg.sft.optim.lr = 1e-4f;
    cfg.sft.optim.warmup_steps = 20;
    cfg.sft.validate_every = 200;
    cfg.sft.steps_per_switch = 50;

    cfg.partition.scheme = Scheme::C;
    return cfg;
}

namespace {

void write_condition_run(const fs::path& suite_dir, const std::string& treatment, int seed,
                         int cipher_seed, const EvalReport& tgt, const EvalReport* src,
                         const json& consumed, const std::string& config_hash,
                         bool include_items) {
    const fs::path rd = suite_dir / "runs" / treatment /
                        ("s" + std::to_string(seed) + "_c" + std::to_string(cipher_seed));
    fs::create_directories(rd);
    write_text(rd / "eval_target.json", tgt.to_json(include_items));
    json em;
    em["target"] = tgt.em_accuracy;
    if (src) {
        write_text(rd / "eval_source.json", src->to_json(include_items));
        em["source"] = src->em_accuracy;
    }
    json s;
    s["name"] = treatment + "-" + block_label(seed, cipher_seed);
    s["treatment"] = treatment;
    s["block"] = block_label(seed, cipher_seed);
    s["seed"] = seed;
    s["cipher_seed"] = cipher_seed;
    s["status"] = "ok";
    s["metrics"] = {{"em", em}};
    s["checkpoints"] = {{"consumed", consumed}};
    s["config_hash"] = config_hash;
    s["template_version"] = kFewshotTemplateVersion;
    write_text(rd / "summary.json", dump2(s));
}

}  // namespace

SuiteResult run_suite(const SuiteConfig& cfg) {
    cfg.validate();
    const fs::path dir(cfg.output_dir);
    prepare_dir(dir, cfg.overwrite);
    fs::create_directories(dir / "checkpoints");
    fs::create_directories(dir / "datasets");
    fs::create_directories(dir / "runs");

    json cfg_json = cfg;
    const std::string config_hash = fnv_hex(fnv1a64(cfg_json.dump()));
    write_text(dir / "config.json", dump2(cfg_json));

    const PartitionSpec spec = allocate_scheme(cfg.partition.scheme, cfg.model,
                                               cfg.partition.boundary_policy,
                                               cfg.partition.z_complement);
    write_text(dir / "partition.json", spec.to_json());

    const Vocab vocab = Vocab::build();
    const Cipher identity = build_cipher(vocab, 0, true);

    ScoreTable table;
    table.treatments = kSuiteTreatments;

    json conditions = json::array();
    json revert_rows = json::array();
    json ckpt_index = json::object();
    json lambda_report;
    int reset_wins = 0;

    const auto save_ckpt = [&](const ModelParams& m, const std::string& name) {
        const fs::path p = dir / "checkpoints" / name;
        save_model_checkpoint(m, p.string());
        const std::string h = ckpt_hash(p);
        ckpt_index["checkpoints/" + name] = h;
        return h;
    };

    const int n_train = cfg.data.train_per_dataset;
    const int n_val = cfg.data.val_per_dataset;

    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
        const int seed = cfg.seeds[si];
        const std::string ss = std::to_string(seed);

        Dataset math_pre = gen_math_corpus(n_train, fold_seed(seed, "pre-math"));
        Dataset lang_pre = gen_language_corpus(n_train, fold_seed(seed, "pre-lang"), identity);
        Dataset math_sft = gen_math_corpus(n_train, fold_seed(seed, "sft-math"));
        Dataset math_val = gen_math_corpus(n_val, fold_seed(seed, "val-math"));
        Dataset lang_pre_val =
            gen_language_corpus(n_val, fold_seed(seed, "val-pre-lang"), identity);
        save_dataset_jsonl(math_sft, (dir / "datasets" / ("math_sft_s" + ss + ".jsonl")).string());

        ModelConfig mc = cfg.model;
        mc.seed = seed;
        ModelParams base = init_model(mc);
        {
            TrainConfig pre = cfg.pretrain;
            pre.mode = TrainMode::mixed;
            pre.seed = fold_seed(seed, "pretrain");
            const Dataset pre_val = blend_valsets(lang_pre_val, math_val);
            TrainReport r = train_mixed(base, lang_pre, math_pre, pre, &pre_val);
            write_text(dir / ("pretrain_report_s" + ss + ".json"), r.to_json());
        }
        const std::string base_hash = save_ckpt(base, "base_s" + ss + ".ckpt");

        ModelParams math_expert = base;
        {
            TrainConfig tc = cfg.sft;
            tc.mode = TrainMode::single;
            tc.seed = fold_seed(seed, "sft-math-full");
            train_single(math_expert, math_sft, std::nullopt, std::nullopt, tc, &math_val);
        }
        const std::string math_hash = save_ckpt(math_expert, "math_s" + ss + ".ckpt");

        ModelParams partial_math = base;
        {
            TrainConfig tc = cfg.sft;
            tc.mode = TrainMode::single;
            tc.seed = fold_seed(seed, "sft-math-partial");
            train_single(partial_math, math_sft, spec, Side::MATH, tc, &math_val);
        }
        const std::string pmath_hash = save_ckpt(partial_math, "partial_math_s" + ss + ".ckpt");

        // The source eval set only depends on the seed, so build it once via
        // the first cipher.
        const Cipher first_cipher = build_cipher(vocab, cfg.cipher_seeds.front());
        auto [eval_src, eval_tgt_unused] =
            gen_eval_sets(cfg.data.eval_items, fold_seed(seed, "eval"), first_cipher);
        (void)eval_tgt_unused;

        if (cfg.revert_harness) {
            // The harness freezes and resets transformer layers only, so the
            // boundary tensors stay on the trainable side regardless of the
            // suite's merge boundary policy.
            const PartitionSpec hspec =
                allocate_scheme(cfg.partition.scheme, mc, Side::MATH, cfg.partition.z_complement);
            ModelParams frozen_during = base;
            {
                TrainConfig tc = cfg.sft;
                tc.mode = TrainMode::single;
                tc.seed = fold_seed(seed, "sft-math-frozen");
                train_single(frozen_during, math_sft, hspec, Side::MATH, tc, &math_val);
            }
            const std::string frozen_hash =
                save_ckpt(frozen_during, "frozen_during_s" + ss + ".ckpt");
            ModelParams reset_after = revert(math_expert, base, hspec.side_names(Side::LANG));
            const std::string reset_hash = save_ckpt(reset_after, "reset_after_s" + ss + ".ckpt");
            const double em_frozen =
                exact_match_eval(frozen_during, eval_src, cfg.eval.n_shot).em_accuracy;
            const double em_reset =
                exact_match_eval(reset_after, eval_src, cfg.eval.n_shot).em_accuracy;
            const double em_full =
                exact_match_eval(math_expert, eval_src, cfg.eval.n_shot).em_accuracy;
            const double em_base = exact_match_eval(base, eval_src, cfg.eval.n_shot).em_accuracy;
            if (em_reset >= em_frozen) ++reset_wins;
            revert_rows.push_back(json{{"seed", seed},
                                       {"frozen_during", em_frozen},
                                       {"reset_after", em_reset},
                                       {"full", em_full},
                                       {"base", em_base},
                                       {"checkpoints",
                                        {{"base", base_hash},
                                         {"frozen_during", frozen_hash},
                                         {"full", math_hash},
                                         {"reset_after", reset_hash}}}});
        }

        for (int cs : cfg.cipher_seeds) {
            const std::string cc = std::to_string(cs);
            const Cipher cipher = build_cipher(vocab, cs);
            Dataset lang_sft =
                gen_language_corpus(n_train, fold_seed(seed, "sft-lang-" + cc), cipher);
            Dataset lang_val =
                gen_language_corpus(n_val, fold_seed(seed, "val-lang-" + cc), cipher);
            save_dataset_jsonl(
                lang_sft, (dir / "datasets" / ("lang_sft_s" + ss + "_c" + cc + ".jsonl")).string());
            auto [src_set, tgt_set] =
                gen_eval_sets(cfg.data.eval_items, fold_seed(seed, "eval"), cipher);
            save_dataset_jsonl(
                tgt_set, (dir / "datasets" / ("eval_target_s" + ss + "_c" + cc + ".jsonl")).string());
            if (cs == cfg.cipher_seeds.front()) {
                save_dataset_jsonl(src_set,
                                   (dir / "datasets" / ("eval_source_s" + ss + ".jsonl")).string());
            }
            const Dataset blended = blend_valsets(lang_val, math_val);

            ModelParams lang_expert = base;
            {
                TrainConfig tc = cfg.sft;
                tc.mode = TrainMode::single;
                tc.seed = fold_seed(seed, "sft-lang-full-" + cc);
                train_single(lang_expert, lang_sft, std::nullopt, std::nullopt, tc, &lang_val);
            }
            const std::string lang_hash = save_ckpt(lang_expert, "lang_s" + ss + "_c" + cc + ".ckpt");

            ModelParams partial_lang = base;
            {
                TrainConfig tc = cfg.sft;
                tc.mode = TrainMode::single;
                tc.seed = fold_seed(seed, "sft-lang-partial-" + cc);
                train_single(partial_lang, lang_sft, spec, Side::LANG, tc, &lang_val);
            }
            const std::string plang_hash =
                save_ckpt(partial_lang, "partial_lang_s" + ss + "_c" + cc + ".ckpt");

            ModelParams mixed = base;
            {
                TrainConfig tc = cfg.sft;
                tc.mode = TrainMode::mixed;
                tc.seed = fold_seed(seed, "mix-" + cc);
                train_mixed(mixed, lang_sft, math_sft, tc, &blended);
            }
            const std::string mix_hash = save_ckpt(mixed, "mix_s" + ss + "_c" + cc + ".ckpt");

            ModelParams simul = base;
            {
                TrainConfig tc = cfg.sft;
                tc.mode = TrainMode::simultaneous;
                tc.seed = fold_seed(seed, "simul-" + cc);
                train_simultaneous(simul, lang_sft, math_sft, spec, tc, &blended);
            }
            const std::string simul_hash = save_ckpt(simul, "simul_s" + ss + "_c" + cc + ".ckpt");

            MergePlan plan;
            plan.spec = spec;
            plan.donor_of_side = {{Side::MATH, "math_s" + ss},
                                  {Side::LANG, "lang_s" + ss + "_c" + cc}};
            ModelParams swap = layer_swap(math_expert, lang_expert, plan);
            const std::string swap_hash = save_ckpt(swap, "swap_s" + ss + "_c" + cc + ".ckpt");

            MergePlan pplan;
            pplan.spec = spec;
            pplan.donor_of_side = {{Side::MATH, "partial_math_s" + ss},
                                   {Side::LANG, "partial_lang_s" + ss + "_c" + cc}};
            ModelParams pswap = layer_swap(partial_math, partial_lang, pplan);
            const std::string pswap_hash =
                save_ckpt(pswap, "partial_swap_s" + ss + "_c" + cc + ".ckpt");

            struct Entry {
                const char* treatment;
                const ModelParams* model;
                json consumed;
            };
            const std::vector<Entry> entries = {
                {"math_only", &math_expert, {{"math_expert", math_hash}}},
                {"lang_only", &lang_expert, {{"lang_expert", lang_hash}}},
                {"data_mix", &mixed, {{"model", mix_hash}}},
                {"simultaneous", &simul, {{"model", simul_hash}}},
                {"layer_swap", &swap,
                 {{"math_expert", math_hash}, {"lang_expert", lang_hash}, {"merged", swap_hash}}},
                {"partial_swap", &pswap,
                 {{"math_expert", pmath_hash},
                  {"lang_expert", plang_hash},
                  {"merged", pswap_hash}}},
            };

            std::vector<double> row;
            json cond;
            cond["block"] = block_label(seed, cs);
            cond["seed"] = seed;
            cond["cipher_seed"] = cs;
            json tgt_em = json::object();
            json src_em = json::object();
            for (const auto& e : entries) {
                EvalReport tgt = exact_match_eval(*e.model, tgt_set, cfg.eval.n_shot);
                tgt.split = "target";
                std::optional<EvalReport> src;
                if (cfg.source_evals) {
                    src = exact_match_eval(*e.model, src_set, cfg.eval.n_shot);
                    src->split = "source";
                    src_em[e.treatment] = src->em_accuracy;
                }
                write_condition_run(dir, e.treatment, seed, cs, tgt, src ? &*src : nullptr,
                                    e.consumed, config_hash, cfg.eval.include_items);
                tgt_em[e.treatment] = tgt.em_accuracy;
                row.push_back(tgt.em_accuracy);
            }
            {
                EvalReport base_tgt = exact_match_eval(base, tgt_set, cfg.eval.n_shot);
                base_tgt.split = "target";
                tgt_em["base"] = base_tgt.em_accuracy;
                write_condition_run(dir, "base", seed, cs, base_tgt, nullptr,
                                    json{{"base", base_hash}}, config_hash,
                                    cfg.eval.include_items);
            }
            cond["target_em"] = tgt_em;
            if (cfg.source_evals) cond["source_em"] = src_em;
            conditions.push_back(std::move(cond));
            table.blocks.push_back(block_label(seed, cs));
            table.scores.push_back(std::move(row));

            if (cfg.lambda_grid && si == 0 && cs == cfg.cipher_seeds.front()) {
                const TaskVector tv = task_vector(base, swap, "base_s" + ss);
                json rows = json::array();
                for (float l : cfg.lambdas) {
                    ModelParams blend = interpolate_blockwise(base, tv, l);
                    const double em =
                        exact_match_eval(blend, tgt_set, cfg.eval.n_shot).em_accuracy;
                    rows.push_back(json{{"lambda", l}, {"target_em", em}});
                }
                lambda_report = json{{"block", block_label(seed, cs)}, {"rows", rows}};
                write_text(dir / "lambda_grid.json", dump2(lambda_report));
            }
        }
    }

    write_text(dir / "score_table.csv", table.to_csv());
    write_text(dir / "score_table.json", table.to_json());
    // Friedman needs two or more blocks; smoke runs with one block skip it.
    FriedmanResult fr;
    json fr_json;
    if (table.blocks.size() >= 2) {
        table.validate();
        fr = friedman_test(table);
        fr_json = json{
            {"chi_square", fr.chi_square}, {"p_value", fr.p_value}, {"k", fr.k}, {"n", fr.n}};
    }
    write_text(dir / "friedman.json", dump2(fr_json));

    json summary;
    summary["config_hash"] = config_hash;
    summary["seed_source"] = cfg.seed_source;
    summary["template_version"] = kFewshotTemplateVersion;
    summary["treatments"] = table.treatments;
    summary["blocks"] = table.blocks;
    summary["conditions"] = conditions;
    summary["checkpoints"] = ckpt_index;
    summary["friedman"] = fr_json;

    std::map<std::string, double> medians;
    for (std::size_t c = 0; c < table.treatments.size(); ++c) {
        std::vector<double> col;
        for (const auto& r : table.scores) col.push_back(r[c]);
        medians[table.treatments[c]] = median(col);
    }
    {
        std::vector<double> base_col;
        for (const auto& cond : conditions) {
            base_col.push_back(cond.at("target_em").at("base").get<double>());
        }
        medians["base"] = median(base_col);
    }
    summary["median_target_em"] = medians;
    summary["layer_swap_beats"] = {
        {"math_only", medians["layer_swap"] > medians["math_only"]},
        {"lang_only", medians["layer_swap"] > medians["lang_only"]},
        {"base", medians["layer_swap"] > medians["base"]}};

    if (cfg.revert_harness) {
        json rh;
        rh["scheme"] = spec.scheme_tag;
        rh["rows"] = revert_rows;
        rh["reset_wins"] = reset_wins;
        rh["n_seeds"] = cfg.seeds.size();
        rh["majority_reset_after_ge_frozen"] =
            reset_wins * 2 > static_cast<int>(cfg.seeds.size());
        write_text(dir / "revert_harness.json", dump2(rh));
        summary["revert_harness"] = rh;
    }
    if (cfg.lambda_grid && !lambda_report.is_null()) summary["lambda_grid"] = lambda_report;

    summary["status"] = "ok";
    write_text(dir / "summary.json", dump2(summary));

    SuiteResult result;
    result.suite_dir = dir.string();
    result.table = std::move(table);
    result.friedman = fr;
    result.summary = std::move(summary);
    return result;
}

void AblateConfig::validate() const {
    model.validate();
    data.validate();
    pretrain.validate();
    sft.validate();
    if (cadences.empty()) throw ConfigError("cadence list must be non-empty");
    for (const auto& c : cadences) {
        if (c == "sequential") continue;
        try {
            if (std::stoi(c) < 1) throw ConfigError("cadence must be >= 1: " + c);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("bad cadence token: " + c);
        }
    }
    if (eval.n_shot < 0) throw ConfigError("n_shot must be >= 0");
    if (output_dir.empty()) throw ConfigError("output_dir must be non-empty");
    allocate_scheme(partition.scheme, model, partition.boundary_policy, partition.z_complement);
}

void to_json(json& j, const AblateConfig& c) {
    j = json{{"model", c.model},         {"data", c.data},
             {"pretrain", c.pretrain},   {"sft", c.sft},
             {"partition", c.partition}, {"cadences", c.cadences},
             {"seed", c.seed},           {"seed_source", c.seed_source},
             {"eval", c.eval},           {"output_dir", c.output_dir},
             {"overwrite", c.overwrite}};
}

void from_json(const json& j, AblateConfig& c) {
    if (j.contains("model")) j.at("model").get_to(c.model);
    if (j.contains("data")) j.at("data").get_to(c.data);
    if (j.contains("pretrain")) j.at("pretrain").get_to(c.pretrain);
    if (j.contains("sft")) j.at("sft").get_to(c.sft);
    if (j.contains("partition")) j.at("partition").get_to(c.partition);
    c.cadences = j.value("cadences", c.cadences);
    c.seed = j.value("seed", c.seed);
    c.seed_source = j.value("seed_source", c.seed_source);
    if (j.contains("eval")) j.at("eval").get_to(c.eval);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.overwrite = j.value("overwrite", c.overwrite);
}

AblateConfig ablate_default_config() {
    AblateConfig cfg;
    const SuiteConfig suite = suite_default_config();
    cfg.model = suite.model;
    cfg.data = suite.data;
    cfg.data.train_per_dataset = 4000;
    cfg.data.eval_items = 200;
    cfg.pretrain = suite.pretrain;
    cfg.pretrain.epochs = 1;
    cfg.sft = suite.sft;
    cfg.partition = suite.partition;
    return cfg;
}

AblateResult run_cadence_ablation(const AblateConfig& cfg) {
    cfg.validate();
    const fs::path dir(cfg.output_dir);
    prepare_dir(dir, cfg.overwrite);

    json cfg_json = cfg;
    const std::string config_hash = fnv_hex(fnv1a64(cfg_json.dump()));
    write_text(dir / "config.json", dump2(cfg_json));

    const PartitionSpec spec = allocate_scheme(cfg.partition.scheme, cfg.model,
                                               cfg.partition.boundary_policy,
                                               cfg.partition.z_complement);
    const Vocab vocab = Vocab::build();
    const Cipher identity = build_cipher(vocab, 0, true);
    const Cipher cipher = build_cipher(vocab, cfg.data.cipher_seed, cfg.data.identity_cipher);
    const int seed = cfg.seed;
    const int n_train = cfg.data.train_per_dataset;
    const int n_val = cfg.data.val_per_dataset;

    Dataset math_pre = gen_math_corpus(n_train, fold_seed(seed, "pre-math"));
    Dataset lang_pre = gen_language_corpus(n_train, fold_seed(seed, "pre-lang"), identity);
    Dataset math_sft = gen_math_corpus(n_train, fold_seed(seed, "sft-math"));
    Dataset lang_sft = gen_language_corpus(n_train, fold_seed(seed, "sft-lang"), cipher);
    Dataset math_val = gen_math_corpus(n_val, fold_seed(seed, "val-math"));
    Dataset lang_val = gen_language_corpus(n_val, fold_seed(seed, "val-lang"), cipher);
    Dataset lang_pre_val = gen_language_corpus(n_val, fold_seed(seed, "val-pre-lang"), identity);
    auto [eval_src, eval_tgt] =
        gen_eval_sets(cfg.data.eval_items, fold_seed(seed, "eval"), cipher);
    (void)eval_src;

    ModelConfig mc = cfg.model;
    mc.seed = seed;
    ModelParams base = init_model(mc);
    {
        TrainConfig pre = cfg.pretrain;
        pre.mode = TrainMode::mixed;
        pre.seed = fold_seed(seed, "pretrain");
        const Dataset pre_val = blend_valsets(lang_pre_val, math_val);
        TrainReport r = train_mixed(base, lang_pre, math_pre, pre, &pre_val);
        write_text(dir / "pretrain_report.json", r.to_json());
    }
    save_model_checkpoint(base, (dir / "base.ckpt").string());

    const Dataset blended = blend_valsets(lang_val, math_val);
    const int per_side_budget =
        ((std::max(static_cast<int>(lang_sft.size()), static_cast<int>(math_sft.size())) +
          cfg.sft.effective_batch_size - 1) /
         cfg.sft.effective_batch_size) *
        cfg.sft.epochs;

    json rows = json::array();
    std::ostringstream csv;
    csv << "cadence,steps_per_switch,start_val_loss,end_val_loss,target_em\n";
    for (const auto& token : cfg.cadences) {
        const int sps = token == "sequential" ? per_side_budget : std::stoi(token);
        TrainConfig tc = cfg.sft;
        tc.mode = TrainMode::simultaneous;
        tc.steps_per_switch = sps;
        tc.seed = fold_seed(seed, "cadence-" + token);
        ModelParams model = base;
        TrainReport r = train_simultaneous(model, lang_sft, math_sft, spec, tc, &blended);
        const double em = exact_match_eval(model, eval_tgt, cfg.eval.n_shot).em_accuracy;
        rows.push_back(json{{"cadence", token},
                            {"steps_per_switch", sps},
                            {"start_val_loss", r.start_val_loss()},
                            {"end_val_loss", r.end_val_loss()},
                            {"target_em", em}});
        csv << token << ',' << sps << ',' << r.start_val_loss() << ',' << r.end_val_loss() << ','
            << em << '\n';
    }

    json report;
    report["config_hash"] = config_hash;
    report["seed"] = cfg.seed;
    report["seed_source"] = cfg.seed_source;
    report["scheme"] = spec.scheme_tag;
    report["per_side_steps"] = per_side_budget;
    report["rows"] = rows;
    report["status"] = "ok";
    write_text(dir / "ablation.json", dump2(report));
    write_text(dir / "ablation.csv", csv.str());

    AblateResult result;
    result.dir = dir.string();
    result.report = std::move(report);
    return result;
}

CompareResult compare_treatments(const std::vector<std::string>& run_dirs,
                                 const std::vector<std::string>& treatments) {
    if (treatments.size() < 2) throw StatsError("need at least two treatments");
    if (run_dirs.empty()) throw StatsError("need at least one run directory");

    std::map<std::string, std::map<std::string, double>> cells;
    for (const auto& rd : run_dirs) {
        const fs::path p = fs::path(rd) / "summary.json";
        if (!fs::exists(p)) throw StatsError("missing summary.json in " + rd);
        json s;
        try {
            s = json::parse(read_text(p));
        } catch (const json::exception& ex) {
            throw StatsError("malformed summary in " + rd + ": " + ex.what());
        }
        try {
            const std::string t = s.at("treatment").get<std::string>();
            const std::string block = s.value("block", rd);
            const double em = s.at("metrics").at("em").at("target").get<double>();
            if (std::find(treatments.begin(), treatments.end(), t) == treatments.end()) continue;
            auto& row = cells[block];
            if (row.count(t)) {
                throw StatsError("duplicate cell for block " + block + ", treatment " + t);
            }
            row[t] = em;
        } catch (const json::exception& ex) {
            throw StatsError("summary in " + rd + " lacks a target EM: " + ex.what());
        }
    }
    if (cells.empty()) throw StatsError("no matching treatment reports found");

    ScoreTable table;
    table.treatments = treatments;
    for (const auto& [block, row] : cells) {
        std::vector<double> scores;
        for (const auto& t : treatments) {
            auto it = row.find(t);
            if (it == row.end()) {
                throw StatsError("missing treatment " + t + " for block " + block);
            }
            scores.push_back(it->second);
        }
        table.blocks.push_back(block);
        table.scores.push_back(std::move(scores));
    }
    table.validate();
    return {table, friedman_test(table)};
}

}  // namespace modcomp
