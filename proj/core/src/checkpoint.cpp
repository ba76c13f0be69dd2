#include "modcomp/checkpoint.hpp"

#include "modcomp/error.hpp"
#include "modcomp/hash.hpp"
#include "modcomp/json_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <utility>

namespace modcomp {
namespace {

static_assert(std::endian::native == std::endian::little,
              "payloads are raw native f32 and the format is little-endian");
static_assert(sizeof(float) == 4);

using nlohmann::json;

struct PendingEntry {
    std::string name;
    const Tensor* tensor;
};

void write_file(const std::string& path, CheckpointKind kind, const ModelConfig& config,
                const std::vector<PendingEntry>& entries, json extra) {
    std::vector<char> payload;
    json manifest = json::array();
    for (const auto& e : entries) {
        json m;
        m["name"] = e.name;
        m["shape"] = e.tensor->shape();
        m["offset"] = payload.size();
        manifest.push_back(std::move(m));
        const char* bytes = reinterpret_cast<const char*>(e.tensor->data());
        payload.insert(payload.end(), bytes,
                       bytes + static_cast<std::size_t>(e.tensor->size()) * sizeof(float));
    }

    json header = std::move(extra);
    header["format_version"] = kCheckpointFormatVersion;
    header["kind"] = checkpoint_kind_str(kind);
    header["model"] = config;
    header["manifest"] = std::move(manifest);
    header["content_hash"] = fnv_hex(fnv1a64(payload.data(), payload.size()));

    const std::string header_text = header.dump();
    const std::uint64_t header_len = header_text.size();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    out.flush();
    if (!out) throw CheckpointError("short write: " + path);
}

struct RawCheckpoint {
    CheckpointInfo info;
    json header;
    std::vector<char> payload;
};

RawCheckpoint read_file(const std::string& path, bool want_payload) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open: " + path);

    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(header_len))) {
        throw CheckpointError("truncated before header length: " + path);
    }
    if (header_len == 0 || header_len > (1ull << 30)) {
        throw CheckpointError("implausible header length in " + path);
    }
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (in.gcount() != static_cast<std::streamsize>(header_len)) {
        throw CheckpointError("truncated header: " + path);
    }

    json header = json::parse(header_text, nullptr, false);
    if (header.is_discarded()) throw CheckpointError("malformed header JSON: " + path);

    RawCheckpoint raw;
    try {
        raw.info.format_version = header.at("format_version").get<std::uint32_t>();
        raw.info.kind = checkpoint_kind_parse(header.at("kind").get<std::string>());
        raw.info.config = header.at("model").get<ModelConfig>();
        for (const auto& m : header.at("manifest")) {
            ManifestEntry e;
            e.name = m.at("name").get<std::string>();
            e.shape = m.at("shape").get<std::vector<int>>();
            e.offset = m.at("offset").get<std::uint64_t>();
            raw.info.manifest.push_back(std::move(e));
        }
        raw.info.content_hash = header.at("content_hash").get<std::string>();
    } catch (const json::exception& ex) {
        throw CheckpointError("bad header in " + path + ": " + ex.what());
    }
    if (raw.info.format_version != kCheckpointFormatVersion) {
        throw CheckpointError("unsupported format_version " +
                              std::to_string(raw.info.format_version) + " in " + path);
    }
    raw.header = std::move(header);
    if (!want_payload) return raw;

    std::uint64_t expect = 0;
    for (const auto& e : raw.info.manifest) {
        if (e.offset != expect) throw CheckpointError("manifest offsets not contiguous: " + path);
        expect += static_cast<std::uint64_t>(shape_numel(e.shape)) * sizeof(float);
    }
    raw.payload.resize(expect);
    in.read(raw.payload.data(), static_cast<std::streamsize>(expect));
    if (static_cast<std::uint64_t>(in.gcount()) != expect) {
        throw CheckpointError("truncated payload: " + path);
    }
    char probe = 0;
    if (in.read(&probe, 1)) throw CheckpointError("trailing bytes after payload: " + path);
    if (fnv_hex(fnv1a64(raw.payload.data(), raw.payload.size())) != raw.info.content_hash) {
        throw CheckpointError("content hash mismatch: " + path);
    }
    return raw;
}

Tensor take_tensor(const RawCheckpoint& raw, const ManifestEntry& e) {
    std::vector<float> data(static_cast<std::size_t>(shape_numel(e.shape)));
    std::memcpy(data.data(), raw.payload.data() + e.offset, data.size() * sizeof(float));
    return Tensor(e.shape, std::move(data));
}

void expect_kind(const RawCheckpoint& raw, CheckpointKind kind, const std::string& path) {
    if (raw.info.kind != kind) {
        throw CheckpointError(std::string("expected a ") + checkpoint_kind_str(kind) +
                              " checkpoint, got " + checkpoint_kind_str(raw.info.kind) + ": " +
                              path);
    }
}

}  // namespace

const char* checkpoint_kind_str(CheckpointKind k) {
    switch (k) {
        case CheckpointKind::weights: return "weights";
        case CheckpointKind::lora: return "lora";
        case CheckpointKind::optim: return "optim";
    }
    throw ConfigError("bad CheckpointKind");
}

CheckpointKind checkpoint_kind_parse(const std::string& s) {
    if (s == "weights") return CheckpointKind::weights;
    if (s == "lora") return CheckpointKind::lora;
    if (s == "optim") return CheckpointKind::optim;
    throw CheckpointError("unknown checkpoint kind: " + s);
}

CheckpointInfo read_checkpoint_info(const std::string& path) {
    return read_file(path, false).info;
}

void save_model_checkpoint(const ModelParams& params, const std::string& path) {
    std::vector<PendingEntry> entries;
    for (const auto& name : registry_names(params.config)) {
        auto it = params.weights.find(name);
        if (it == params.weights.end()) {
            throw CheckpointError("model is missing parameter " + name.str());
        }
        entries.push_back({name.str(), &it->second});
    }
    if (params.weights.size() != entries.size()) {
        throw CheckpointError("model holds parameters outside the registry");
    }
    write_file(path, CheckpointKind::weights, params.config, entries, json::object());
}

ModelParams load_model_checkpoint(const std::string& path) {
    RawCheckpoint raw = read_file(path, true);
    expect_kind(raw, CheckpointKind::weights, path);
    raw.info.config.validate();

    const auto expected = registry_names(raw.info.config);
    if (raw.info.manifest.size() != expected.size()) {
        throw CheckpointError("manifest does not match the parameter registry: " + path);
    }
    ModelParams params;
    params.config = raw.info.config;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& e = raw.info.manifest[i];
        if (e.name != expected[i].str()) {
            throw CheckpointError("unexpected manifest entry " + e.name + " in " + path);
        }
        if (e.shape != param_shape(params.config, expected[i])) {
            throw CheckpointError("shape mismatch for " + e.name + " in " + path);
        }
        params.weights.emplace(expected[i], take_tensor(raw, e));
    }
    return params;
}

void save_adapter_checkpoint(const AdapterSet& adapters, const ModelConfig& config,
                             const std::string& path) {
    adapters.config.validate();
    std::vector<PendingEntry> entries;
    for (const auto& [name, pair] : adapters.pairs) {
        entries.push_back({name.with_lora(ParamName::LoraPart::a).str(), &pair.a});
        entries.push_back({name.with_lora(ParamName::LoraPart::b).str(), &pair.b});
    }
    json extra;
    extra["adapter"] = adapters.config;
    write_file(path, CheckpointKind::lora, config, entries, std::move(extra));
}

AdapterSet load_adapter_checkpoint(const std::string& path, ModelConfig* config_out) {
    RawCheckpoint raw = read_file(path, true);
    expect_kind(raw, CheckpointKind::lora, path);

    AdapterSet set;
    try {
        set.config = raw.header.at("adapter").get<AdapterConfig>();
    } catch (const json::exception& ex) {
        throw CheckpointError("bad adapter config in " + path + ": " + ex.what());
    }
    set.config.validate();

    for (const auto& e : raw.info.manifest) {
        ParamName pn = ParamName::parse(e.name);
        if (pn.lora == ParamName::LoraPart::none) {
            throw CheckpointError("non-adapter entry " + e.name + " in " + path);
        }
        AdapterPair& pair = set.pairs[pn.base()];
        (pn.lora == ParamName::LoraPart::a ? pair.a : pair.b) = take_tensor(raw, e);
    }
    for (const auto& [name, pair] : set.pairs) {
        if (pair.a.size() == 0 || pair.b.size() == 0) {
            throw CheckpointError("incomplete adapter pair for " + name.str() + " in " + path);
        }
        if (pair.a.rows() != set.config.rank || pair.b.cols() != set.config.rank) {
            throw CheckpointError("adapter rank mismatch for " + name.str() + " in " + path);
        }
    }
    for (const auto& target : set.config.target_names) {
        if (!set.pairs.count(target)) {
            throw CheckpointError("missing adapter for target " + target.str() + " in " + path);
        }
    }
    if (set.pairs.size() != set.config.target_names.size()) {
        throw CheckpointError("adapter entries outside target_names in " + path);
    }
    if (config_out) *config_out = raw.info.config;
    return set;
}

void save_optim_checkpoint(const OptimizerState& state, const ModelConfig& config,
                           const std::string& path) {
    std::vector<PendingEntry> entries;
    json step_counts = json::object();
    for (const auto& [name, entry] : state.moments) {
        entries.push_back({name.str() + ".m", &entry.m});
        entries.push_back({name.str() + ".v", &entry.v});
        step_counts[name.str()] = entry.t;
    }
    json extra;
    extra["global_step"] = state.global_step;
    extra["step_counts"] = std::move(step_counts);
    write_file(path, CheckpointKind::optim, config, entries, std::move(extra));
}

OptimizerState load_optim_checkpoint(const std::string& path) {
    RawCheckpoint raw = read_file(path, true);
    expect_kind(raw, CheckpointKind::optim, path);

    OptimizerState state;
    json step_counts;
    try {
        state.global_step = raw.header.at("global_step").get<int>();
        step_counts = raw.header.at("step_counts");
    } catch (const json::exception& ex) {
        throw CheckpointError("bad optimizer header in " + path + ": " + ex.what());
    }

    for (const auto& e : raw.info.manifest) {
        std::string base = e.name;
        bool is_m = false;
        if (base.size() > 2 && base.substr(base.size() - 2) == ".m") {
            is_m = true;
        } else if (base.size() > 2 && base.substr(base.size() - 2) == ".v") {
            is_m = false;
        } else {
            throw CheckpointError("unexpected optimizer entry " + e.name + " in " + path);
        }
        base.resize(base.size() - 2);
        ParamName pn = ParamName::parse(base);
        MomentEntry& entry = state.moments[pn];
        (is_m ? entry.m : entry.v) = take_tensor(raw, e);
        if (!step_counts.contains(base)) {
            throw CheckpointError("missing step count for " + base + " in " + path);
        }
        entry.t = step_counts.at(base).get<int>();
    }
    for (const auto& [name, entry] : state.moments) {
        if (!entry.m.same_shape(entry.v)) {
            throw CheckpointError("m/v shape mismatch for " + name.str() + " in " + path);
        }
    }
    return state;
}

}  // namespace modcomp
