#include "modcomp/checkpoint.hpp"
#include "modcomp/error.hpp"
#include "modcomp/experiment.hpp"
#include "modcomp/tasks.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace modcomp;

namespace {

int exit_code_for(const std::exception& ex) {
    const std::string c = error_class(ex);
    if (c == "config") return 2;
    if (c == "data") return 3;
    if (c == "train") return 4;
    if (c == "merge") return 5;
    if (c == "eval") return 6;
    return 1;
}

std::optional<int> env_seed() {
    const char* raw = std::getenv("MODCOMP_SEED");
    if (!raw || !*raw) return std::nullopt;
    try {
        std::size_t pos = 0;
        const int v = std::stoi(raw, &pos);
        if (pos != std::string(raw).size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string("MODCOMP_SEED is not an integer: ") + raw);
    }
}

std::string find_config_arg(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) return argv[i + 1];
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    }
    return "";
}

template <typename T>
void load_config_file(const std::string& path, T& cfg) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    json j;
    try {
        in >> j;
        j.get_to(cfg);
    } catch (const json::exception& ex) {
        throw ConfigError("bad config file " + path + ": " + ex.what());
    }
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

// ---------------------------------------------------------------- gen-data

struct GenArgs {
    std::string out = "data";
    int train_per_dataset = 8000;
    int val_per_dataset = 200;
    int eval_items = 500;
    int seed = 0;
    int cipher_seed = 101;
    bool identity_cipher = false;
    bool overwrite = false;
};

int cmd_gen_data(GenArgs a) {
    std::string seed_source = "config";
    if (auto s = env_seed()) {
        a.seed = *s;
        seed_source = "env";
    }
    const fs::path dir(a.out);
    if (fs::exists(dir) && !fs::is_empty(dir) && !a.overwrite) {
        throw ConfigError("output dir exists and is not empty (pass --overwrite): " + a.out);
    }
    fs::create_directories(dir);

    auto [vocab, cipher] = build_vocab_cipher(a.cipher_seed, a.identity_cipher);
    const Dataset math_train = gen_math_corpus(a.train_per_dataset, fold_seed(a.seed, "math-train"));
    const Dataset lang_train =
        gen_language_corpus(a.train_per_dataset, fold_seed(a.seed, "lang-train"), cipher);
    const Dataset math_val = gen_math_corpus(a.val_per_dataset, fold_seed(a.seed, "math-val"));
    const Dataset lang_val =
        gen_language_corpus(a.val_per_dataset, fold_seed(a.seed, "lang-val"), cipher);
    auto [eval_src, eval_tgt] = gen_eval_sets(a.eval_items, fold_seed(a.seed, "eval"), cipher);

    save_dataset_jsonl(math_train, (dir / "math_train.jsonl").string());
    save_dataset_jsonl(lang_train, (dir / "lang_train.jsonl").string());
    save_dataset_jsonl(math_val, (dir / "math_val.jsonl").string());
    save_dataset_jsonl(lang_val, (dir / "lang_val.jsonl").string());
    save_dataset_jsonl(eval_src, (dir / "eval_source.jsonl").string());
    save_dataset_jsonl(eval_tgt, (dir / "eval_target.jsonl").string());

    json mapping = json::object();
    for (int id = Vocab::first_content; id < vocab.size(); ++id) {
        mapping[vocab.tokens[id]] = vocab.tokens[cipher.apply(id)];
    }
    json summary;
    summary["seed"] = a.seed;
    summary["seed_source"] = seed_source;
    summary["cipher_seed"] = a.cipher_seed;
    summary["identity_cipher"] = a.identity_cipher;
    summary["counts"] = {{"math_train", math_train.size()}, {"lang_train", lang_train.size()},
                         {"math_val", math_val.size()},     {"lang_val", lang_val.size()},
                         {"eval_items", eval_src.size()},   {"exemplars", eval_src.exemplars.size()}};
    summary["cipher_mapping"] = mapping;
    write_file(dir / "gen_summary.json", summary.dump(2));
    std::cout << "wrote " << dir.string() << " (" << math_train.size() << "+" << lang_train.size()
              << " train samples)\n";
    return 0;
}

// ---------------------------------------------------------------- train

int cmd_train(ExperimentConfig cfg) {
    if (auto s = env_seed()) {
        cfg.seed = *s;
        cfg.seed_source = "env";
    }
    const RunResult r = run_experiment(cfg);
    std::cout << "run dir: " << r.run_dir << "\n";
    if (r.summary.contains("metrics")) {
        for (const auto& [split, em] : r.summary.at("metrics").at("em").items()) {
            std::cout << "em " << split << ": " << em.get<double>() << "\n";
        }
    }
    return 0;
}

// ---------------------------------------------------------------- merge

struct MergeArgs {
    std::string kind = "layer_swap";
    std::string math_expert, lang_expert;  // weight checkpoints
    std::string math_lora, lang_lora;      // adapter checkpoints
    std::string expert, base;
    std::string scheme = "C";
    std::string boundary = "LANG";
    bool z_complement = true;
    std::string side = "LANG";
    float lam = 0.5f;
    bool allow_extrapolation = false;
    std::string out = "merged.ckpt";
    std::string plan_out;
};

int cmd_merge(const MergeArgs& a) {
    const auto spec_for = [&](const ModelConfig& mc) {
        return allocate_scheme(scheme_parse(a.scheme), mc, side_parse(a.boundary),
                               a.z_complement);
    };
    if (a.kind == "layer_swap") {
        if (a.math_expert.empty() || a.lang_expert.empty()) {
            throw ConfigError("layer_swap needs --math-expert and --lang-expert");
        }
        const ModelParams math_m = load_model_checkpoint(a.math_expert);
        const ModelParams lang_m = load_model_checkpoint(a.lang_expert);
        if (!(math_m.config == lang_m.config)) throw MergeError("expert configs differ");
        MergePlan plan;
        plan.spec = spec_for(math_m.config);
        plan.donor_of_side = {{Side::MATH, a.math_expert}, {Side::LANG, a.lang_expert}};
        const ModelParams merged = layer_swap(math_m, lang_m, plan);
        save_model_checkpoint(merged, a.out);
        if (!a.plan_out.empty()) write_file(a.plan_out, plan.to_json());
        std::cout << "wrote " << a.out << "\n";
        return 0;
    }
    if (a.kind == "lora_swap") {
        if (a.math_lora.empty() || a.lang_lora.empty()) {
            throw ConfigError("lora_swap needs --math-lora and --lang-lora");
        }
        ModelConfig mc_math, mc_lang;
        const AdapterSet math_a = load_adapter_checkpoint(a.math_lora, &mc_math);
        const AdapterSet lang_a = load_adapter_checkpoint(a.lang_lora, &mc_lang);
        if (!(mc_math == mc_lang)) throw MergeError("adapter model configs differ");
        MergePlan plan;
        plan.spec = spec_for(mc_math);
        plan.donor_of_side = {{Side::MATH, a.math_lora}, {Side::LANG, a.lang_lora}};
        const AdapterSet merged = lora_swap_merge(math_a, lang_a, plan);
        save_adapter_checkpoint(merged, mc_math, a.out);
        if (!a.plan_out.empty()) write_file(a.plan_out, plan.to_json());
        std::cout << "wrote " << a.out << "\n";
        return 0;
    }
    if (a.kind == "revert") {
        if (a.expert.empty() || a.base.empty()) throw ConfigError("revert needs --expert and --base");
        const ModelParams expert = load_model_checkpoint(a.expert);
        const ModelParams base = load_model_checkpoint(a.base);
        if (!(expert.config == base.config)) throw MergeError("expert/base configs differ");
        const PartitionSpec spec = spec_for(base.config);
        const ModelParams out = revert(expert, base, spec.side_names(side_parse(a.side)));
        save_model_checkpoint(out, a.out);
        std::cout << "wrote " << a.out << "\n";
        return 0;
    }
    if (a.kind == "interpolate") {
        if (a.expert.empty() || a.base.empty()) {
            throw ConfigError("interpolate needs --expert and --base");
        }
        const ModelParams expert = load_model_checkpoint(a.expert);
        const ModelParams base = load_model_checkpoint(a.base);
        if (!(expert.config == base.config)) throw MergeError("expert/base configs differ");
        const TaskVector tv = task_vector(base, expert, a.base);
        const ModelParams out = interpolate_blockwise(base, tv, a.lam, a.allow_extrapolation);
        save_model_checkpoint(out, a.out);
        std::cout << "wrote " << a.out << "\n";
        return 0;
    }
    throw ConfigError("unknown merge kind: " + a.kind);
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string model;
    std::string lora;
    std::string dataset;
    std::string split;
    int n_shot = 2;
    bool include_items = false;
    std::string out;
};

int cmd_eval(const EvalArgs& a) {
    if (a.model.empty()) throw ConfigError("--model is required");
    if (a.dataset.empty()) throw ConfigError("--dataset is required");
    const ModelParams params = load_model_checkpoint(a.model);
    std::optional<AdapterSet> adapters;
    if (!a.lora.empty()) {
        ModelConfig mc;
        adapters = load_adapter_checkpoint(a.lora, &mc);
        if (!(mc == params.config)) throw ConfigError("adapter checkpoint config mismatch");
    }
    const Dataset ds = load_dataset_jsonl(a.dataset);
    EvalReport report =
        exact_match_eval(params, ds, a.n_shot, adapters ? &*adapters : nullptr);
    report.split = a.split.empty() ? ds.origin : a.split;
    if (!a.out.empty()) write_file(a.out, report.to_json(a.include_items));
    std::cout << "split " << report.split << ": em " << report.em_accuracy << " over "
              << report.n_items << " items\n";
    return 0;
}

// ---------------------------------------------------------------- ablate / suite / compare

int cmd_ablate(AblateConfig cfg) {
    if (auto s = env_seed()) {
        cfg.seed = *s;
        cfg.seed_source = "env";
    }
    const AblateResult r = run_cadence_ablation(cfg);
    std::cout << "ablation dir: " << r.dir << "\n";
    for (const auto& row : r.report.at("rows")) {
        std::cout << "cadence " << row.at("cadence").get<std::string>() << ": val "
                  << row.at("start_val_loss").get<double>() << " -> "
                  << row.at("end_val_loss").get<double>() << ", target em "
                  << row.at("target_em").get<double>() << "\n";
    }
    return 0;
}

int cmd_suite(SuiteConfig cfg) {
    if (auto s = env_seed()) {
        cfg.seeds = {*s};
        cfg.seed_source = "env";
    }
    const SuiteResult r = run_suite(cfg);
    std::cout << "suite dir: " << r.suite_dir << "\n";
    std::cout << r.table.to_csv();
    std::cout << "friedman chi2 " << r.friedman.chi_square << ", p " << r.friedman.p_value
              << " (k=" << r.friedman.k << ", n=" << r.friedman.n << ")\n";
    for (const auto& [name, em] : r.summary.at("median_target_em").items()) {
        std::cout << "median target em " << name << ": " << em.get<double>() << "\n";
    }
    return 0;
}

struct CompareArgs {
    std::vector<std::string> runs;
    std::vector<std::string> treatments;
    std::string out;
};

int cmd_compare(const CompareArgs& a) {
    const CompareResult r = compare_treatments(a.runs, a.treatments);
    std::cout << r.table.to_csv();
    std::cout << "friedman chi2 " << r.friedman.chi_square << ", p " << r.friedman.p_value
              << " (k=" << r.friedman.k << ", n=" << r.friedman.n << ")\n";
    if (!a.out.empty()) {
        json j;
        j["table"] = json::parse(r.table.to_json());
        j["friedman"] = {{"chi_square", r.friedman.chi_square},
                         {"p_value", r.friedman.p_value},
                         {"k", r.friedman.k},
                         {"n", r.friedman.n}};
        write_file(a.out, j.dump(2));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"modcomp: modular cross-lingual transfer experiments on a toy transformer"};
    app.require_subcommand(1);
    const std::string config_path = find_config_arg(argc, argv);

    // gen-data
    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate corpora and eval sets");
    gen_cmd->add_option("--out", gen.out, "output directory");
    gen_cmd->add_option("--train-per-dataset", gen.train_per_dataset, "samples per corpus");
    gen_cmd->add_option("--val-per-dataset", gen.val_per_dataset, "validation samples per corpus");
    gen_cmd->add_option("--eval-items", gen.eval_items, "scored eval items");
    gen_cmd->add_option("--seed", gen.seed, "master seed");
    gen_cmd->add_option("--cipher-seed", gen.cipher_seed, "cipher permutation seed");
    gen_cmd->add_flag("--identity-cipher", gen.identity_cipher, "debug identity mapping");
    gen_cmd->add_flag("--overwrite", gen.overwrite, "replace an existing non-empty directory");

    // train
    ExperimentConfig tr;
    if (!config_path.empty()) {
        // Loaded up front so flags override the file.
    }
    auto* train_cmd = app.add_subcommand("train", "Run one experiment pipeline");
    std::string tr_config, tr_scheme, tr_boundary, tr_merge_kind, tr_revert_side;
    int tr_lora_rank = 0, tr_lora_seed = 0;
    float tr_lora_alpha = 16.0f;
    train_cmd->add_option("--config", tr_config, "JSON experiment config");
    train_cmd->add_option("--name", tr.name, "run name");
    train_cmd->add_option("--treatment", tr.treatment, "training treatment")
        ->check(CLI::IsMember(kRunTreatments));
    train_cmd->add_option("--seed", tr.seed, "master seed");
    train_cmd->add_option("--out", tr.output_dir, "run directory");
    train_cmd->add_flag("--overwrite", tr.overwrite, "replace an existing run directory");
    train_cmd->add_option("--base-checkpoint", tr.base_checkpoint, "starting weights");
    train_cmd->add_option("--n-layers", tr.model.n_layers, "transformer layers");
    train_cmd->add_option("--d-model", tr.model.d_model, "model width");
    train_cmd->add_option("--n-heads", tr.model.n_heads, "attention heads");
    train_cmd->add_option("--d-ff", tr.model.d_ff, "MLP hidden width");
    train_cmd->add_option("--max-seq-len", tr.model.max_seq_len, "positional range");
    train_cmd->add_option("--train-per-dataset", tr.data.train_per_dataset, "samples per corpus");
    train_cmd->add_option("--val-per-dataset", tr.data.val_per_dataset, "val samples per corpus");
    train_cmd->add_option("--eval-items", tr.data.eval_items, "scored eval items");
    train_cmd->add_option("--cipher-seed", tr.data.cipher_seed, "cipher permutation seed");
    train_cmd->add_flag("--identity-cipher", tr.data.identity_cipher, "debug identity mapping");
    train_cmd->add_option("--epochs", tr.training.epochs, "training epochs");
    train_cmd->add_option("--batch-size", tr.training.effective_batch_size, "effective batch size");
    train_cmd->add_option("--steps-per-switch", tr.training.steps_per_switch,
                          "simultaneous block length");
    train_cmd->add_option("--validate-every", tr.training.validate_every, "steps between vals");
    train_cmd->add_option("--lr", tr.training.optim.lr, "peak learning rate");
    train_cmd->add_option("--warmup-steps", tr.training.optim.warmup_steps, "linear warmup");
    train_cmd->add_option("--weight-decay", tr.training.optim.weight_decay, "decoupled decay");
    train_cmd->add_option("--clip-norm", tr.training.optim.max_grad_norm, "grad clip threshold");
    auto* lora_rank_opt = train_cmd->add_option("--lora-rank", tr_lora_rank, "adapter rank (0 = off)");
    train_cmd->add_option("--lora-alpha", tr_lora_alpha, "adapter alpha");
    train_cmd->add_option("--lora-seed", tr_lora_seed, "adapter init seed");
    auto* scheme_opt = train_cmd->add_option("--scheme", tr_scheme, "partition scheme A|B|C|Z");
    auto* boundary_opt =
        train_cmd->add_option("--boundary-policy", tr_boundary, "embed/unembed side LANG|MATH");
    train_cmd->add_option("--z-complement", tr.partition.z_complement,
                          "scheme Z complements scheme B");
    train_cmd->add_option("--n-shot", tr.eval.n_shot, "few-shot exemplars");
    train_cmd->add_option("--splits", tr.eval.splits, "eval splits")->delimiter(',');
    train_cmd->add_flag("--include-items", tr.eval.include_items, "verbose eval reports");
    auto* merge_kind_opt =
        train_cmd->add_option("--merge-kind", tr_merge_kind, "layer_swap|revert|interpolate");
    std::string tr_math_expert, tr_lang_expert;
    float tr_lambda = 1.0f;
    auto* math_expert_opt =
        train_cmd->add_option("--math-expert", tr_math_expert, "external math expert checkpoint");
    auto* lang_expert_opt =
        train_cmd->add_option("--lang-expert", tr_lang_expert, "external lang expert checkpoint");
    auto* revert_side_opt =
        train_cmd->add_option("--revert-side", tr_revert_side, "side reset by a revert merge");
    auto* lambda_opt = train_cmd->add_option("--lambda", tr_lambda, "interpolation weight");

    // merge
    MergeArgs mg;
    auto* merge_cmd = app.add_subcommand("merge", "Combine checkpoints");
    merge_cmd->add_option("--kind", mg.kind, "layer_swap|lora_swap|revert|interpolate");
    merge_cmd->add_option("--math-expert", mg.math_expert, "math expert weights");
    merge_cmd->add_option("--lang-expert", mg.lang_expert, "lang expert weights");
    merge_cmd->add_option("--math-lora", mg.math_lora, "math expert adapters");
    merge_cmd->add_option("--lang-lora", mg.lang_lora, "lang expert adapters");
    merge_cmd->add_option("--expert", mg.expert, "expert weights (revert/interpolate)");
    merge_cmd->add_option("--base", mg.base, "base weights (revert/interpolate)");
    merge_cmd->add_option("--scheme", mg.scheme, "partition scheme A|B|C|Z");
    merge_cmd->add_option("--boundary-policy", mg.boundary, "embed/unembed side");
    merge_cmd->add_option("--z-complement", mg.z_complement, "scheme Z complements scheme B");
    merge_cmd->add_option("--side", mg.side, "side reset by revert");
    merge_cmd->add_option("--lambda", mg.lam, "interpolation weight");
    merge_cmd->add_flag("--allow-extrapolation", mg.allow_extrapolation,
                        "permit lambda outside [0, 1]");
    merge_cmd->add_option("--out", mg.out, "output checkpoint path");
    merge_cmd->add_option("--plan-out", mg.plan_out, "write the merge plan JSON here");

    // eval
    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Exact-match evaluation");
    eval_cmd->add_option("--model", ev.model, "weights checkpoint")->required();
    eval_cmd->add_option("--lora", ev.lora, "adapter checkpoint overlay");
    eval_cmd->add_option("--dataset", ev.dataset, "eval JSONL with exemplars")->required();
    eval_cmd->add_option("--split", ev.split, "split label for the report");
    eval_cmd->add_option("--n-shot", ev.n_shot, "few-shot exemplars");
    eval_cmd->add_flag("--include-items", ev.include_items, "store per-item records");
    eval_cmd->add_option("--out", ev.out, "report JSON path");

    // ablate
    AblateConfig ab = ablate_default_config();
    if (!config_path.empty()) {
        // applied below, only for the parsed subcommand
    }
    auto* ablate_cmd = app.add_subcommand("ablate", "steps_per_switch cadence sweep");
    std::string ab_config, ab_scheme;
    ablate_cmd->add_option("--config", ab_config, "JSON ablate config");
    ablate_cmd->add_option("--out", ab.output_dir, "output directory");
    ablate_cmd->add_option("--seed", ab.seed, "master seed");
    ablate_cmd->add_option("--cadences", ab.cadences, "ints and/or 'sequential'")->delimiter(',');
    ablate_cmd->add_option("--train-per-dataset", ab.data.train_per_dataset, "samples per corpus");
    ablate_cmd->add_option("--eval-items", ab.data.eval_items, "scored eval items");
    ablate_cmd->add_option("--cipher-seed", ab.data.cipher_seed, "cipher permutation seed");
    auto* ab_scheme_opt = ablate_cmd->add_option("--scheme", ab_scheme, "partition scheme");
    ablate_cmd->add_option("--n-shot", ab.eval.n_shot, "few-shot exemplars");
    ablate_cmd->add_flag("--overwrite", ab.overwrite, "replace an existing directory");

    // suite
    SuiteConfig su = suite_default_config();
    auto* suite_cmd = app.add_subcommand("suite", "Full 6-treatment matrix");
    std::string su_config, su_scheme;
    suite_cmd->add_option("--config", su_config, "JSON suite config");
    suite_cmd->add_option("--out", su.output_dir, "suite directory");
    suite_cmd->add_option("--seeds", su.seeds, "model seeds")->delimiter(',');
    suite_cmd->add_option("--cipher-seeds", su.cipher_seeds, "cipher seeds")->delimiter(',');
    suite_cmd->add_option("--train-per-dataset", su.data.train_per_dataset, "samples per corpus");
    suite_cmd->add_option("--eval-items", su.data.eval_items, "scored eval items");
    suite_cmd->add_option("--d-model", su.model.d_model, "model width");
    suite_cmd->add_option("--d-ff", su.model.d_ff, "MLP hidden width");
    suite_cmd->add_option("--n-layers", su.model.n_layers, "transformer layers");
    auto* su_scheme_opt = suite_cmd->add_option("--scheme", su_scheme, "partition scheme");
    suite_cmd->add_option("--n-shot", su.eval.n_shot, "few-shot exemplars");
    suite_cmd->add_option("--source-evals", su.source_evals, "also score the source split");
    suite_cmd->add_option("--revert-harness", su.revert_harness, "run the train-then-revert rows");
    suite_cmd->add_flag("--lambda-grid", su.lambda_grid, "interpolation sub-report");
    suite_cmd->add_flag("--overwrite", su.overwrite, "replace an existing directory");

    // compare
    CompareArgs cp;
    auto* compare_cmd = app.add_subcommand("compare", "Score table + Friedman over run dirs");
    compare_cmd->add_option("--runs", cp.runs, "run directories")->required()->expected(-1);
    compare_cmd->add_option("--treatments", cp.treatments, "treatment columns")
        ->required()
        ->delimiter(',');
    compare_cmd->add_option("--out", cp.out, "comparison JSON path");

    // Config files are applied before flags; rebind current values as the
    // parse baseline by loading them first.
    try {
        if (!config_path.empty()) {
            // The subcommand token is argv[1]; apply the file to its config.
            const std::string sub = argc > 1 ? argv[1] : "";
            if (sub == "train") load_config_file(config_path, tr);
            if (sub == "ablate") load_config_file(config_path, ab);
            if (sub == "suite") load_config_file(config_path, su);
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return exit_code_for(ex);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen_cmd->parsed()) return cmd_gen_data(gen);
        if (train_cmd->parsed()) {
            if (scheme_opt->count()) tr.partition.scheme = scheme_parse(tr_scheme);
            if (boundary_opt->count()) tr.partition.boundary_policy = side_parse(tr_boundary);
            if (lora_rank_opt->count()) {
                if (tr_lora_rank > 0) {
                    AdapterConfig ac;
                    ac.rank = tr_lora_rank;
                    ac.alpha = tr_lora_alpha;
                    ac.seed = tr_lora_seed;
                    tr.training.lora = ac;
                } else {
                    tr.training.lora.reset();
                }
            }
            const bool any_merge_flag = merge_kind_opt->count() || math_expert_opt->count() ||
                                        lang_expert_opt->count() || revert_side_opt->count() ||
                                        lambda_opt->count();
            if (any_merge_flag) {
                MergeSection m = tr.merge.value_or(MergeSection{});
                if (merge_kind_opt->count()) m.kind = tr_merge_kind;
                if (math_expert_opt->count()) m.math_expert = tr_math_expert;
                if (lang_expert_opt->count()) m.lang_expert = tr_lang_expert;
                if (revert_side_opt->count()) m.revert_side = side_parse(tr_revert_side);
                if (lambda_opt->count()) m.lam = tr_lambda;
                tr.merge = m;
            }
            return cmd_train(tr);
        }
        if (merge_cmd->parsed()) return cmd_merge(mg);
        if (eval_cmd->parsed()) return cmd_eval(ev);
        if (ablate_cmd->parsed()) {
            if (ab_scheme_opt->count()) ab.partition.scheme = scheme_parse(ab_scheme);
            return cmd_ablate(ab);
        }
        if (suite_cmd->parsed()) {
            if (su_scheme_opt->count()) su.partition.scheme = scheme_parse(su_scheme);
            return cmd_suite(su);
        }
        if (compare_cmd->parsed()) return cmd_compare(cp);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return exit_code_for(ex);
    }
    return 0;
}
