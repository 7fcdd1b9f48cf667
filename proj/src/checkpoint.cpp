#include "sglab/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstring>
#include <fstream>

namespace sglab {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'S', 'G', 'C', 'K'};

json config_json(const ModelConfig& c) {
    return json{{"hidden_dim", c.hidden_dim}, {"n_layers", c.n_layers},
                {"n_heads", c.n_heads},       {"vocab_size", c.vocab_size},
                {"patch_dim", c.patch_dim},   {"max_seq_len", c.max_seq_len},
                {"mlp_ratio", c.mlp_ratio},   {"seed", c.seed}};
}

ModelConfig config_from(const json& j) {
    ModelConfig c;
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.patch_dim = j.at("patch_dim").get<int>();
    c.max_seq_len = j.at("max_seq_len").get<int>();
    c.mlp_ratio = j.at("mlp_ratio").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    return c;
}

// Row-major serialization keeps the on-disk layout independent of Eigen's
// internal storage order.
void append_tensor(std::vector<float>& payload, const Mat<float>& t) {
    for (Eigen::Index r = 0; r < t.rows(); ++r)
        for (Eigen::Index c = 0; c < t.cols(); ++c) payload.push_back(t(r, c));
}

void read_tensor(const std::vector<float>& payload, size_t offset, Mat<float>& t) {
    size_t i = offset;
    for (Eigen::Index r = 0; r < t.rows(); ++r)
        for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = payload[i++];
}

}  // namespace

std::string model_config_to_json_str(const ModelConfig& c) { return config_json(c).dump(); }

ModelConfig model_config_from_json_str(const std::string& s) {
    return config_from(json::parse(s));
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    json tensors = json::array();
    std::vector<float> payload;
    auto pack = [&](const std::string& prefix, const Parameters<float>& p) {
        p.visit([&](const std::string& name, const Mat<float>& t) {
            tensors.push_back(json{{"name", prefix + name},
                                   {"shape", {t.rows(), t.cols()}},
                                   {"dtype", "f32"},
                                   {"offset", payload.size()}});
            append_tensor(payload, t);
        });
    };
    pack("", ckpt.params);
    if (ckpt.adam) {
        pack("adam.m.", ckpt.adam->m);
        pack("adam.v.", ckpt.adam->v);
    }

    json header{{"format", "sglab-checkpoint"},
                {"version", 1},
                {"config", config_json(ckpt.params.config)},
                {"step", ckpt.step},
                {"epoch", ckpt.epoch},
                {"adam_step", ckpt.adam ? ckpt.adam->step : -1},
                {"param_count", ckpt.params.param_count()},
                {"dataset_manifest_hash", ckpt.manifest_hash},
                {"tensors", tensors}};
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path.string());
    out.write(kMagic, 4);
    const uint64_t hlen = header_str.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!out) throw IoError("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read checkpoint: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw IntegrityError("bad checkpoint magic: " + path.string());
    }
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string header_str(hlen, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(hlen));
    json header = json::parse(header_str);

    Checkpoint ckpt;
    ckpt.params = Parameters<float>::zeros(config_from(header.at("config")));
    ckpt.step = header.at("step").get<int64_t>();
    ckpt.epoch = header.at("epoch").get<int>();
    ckpt.manifest_hash = header.at("dataset_manifest_hash").get<std::string>();

    std::vector<float> payload;
    {
        std::vector<char> rest((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
        payload.resize(rest.size() / sizeof(float));
        std::memcpy(payload.data(), rest.data(), payload.size() * sizeof(float));
    }

    const int64_t adam_step = header.at("adam_step").get<int64_t>();
    if (adam_step >= 0) {
        ckpt.adam = AdamState::zeros(ckpt.params.config);
        ckpt.adam->step = adam_step;
    }

    size_t cursor = 0;
    auto unpack = [&](Parameters<float>& p) {
        p.visit([&](const std::string& name, Mat<float>& t) {
            const json& tj = header.at("tensors").at(cursor);
            const auto shape = tj.at("shape").get<std::vector<Eigen::Index>>();
            if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols()) {
                throw IntegrityError("tensor shape mismatch for " + name);
            }
            read_tensor(payload, tj.at("offset").get<size_t>(), t);
            ++cursor;
        });
    };
    unpack(ckpt.params);
    if (ckpt.adam) {
        unpack(ckpt.adam->m);
        unpack(ckpt.adam->v);
    }
    return ckpt;
}

std::string file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash missing file: " + path.string());
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<uint8_t>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

}  // namespace sglab
