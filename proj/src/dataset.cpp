#include "sglab/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>

#include "sglab/png_io.hpp"
#include "sglab/raster.hpp"

namespace sglab {

using nlohmann::json;

namespace {

const std::string kSubsetDirs[] = {"train", "test_id", "test_ood"};

json config_to_json(const DatasetConfig& c) {
    return json{{"n_colors", c.n_colors},
                {"common_ratio", c.common_ratio},
                {"p_burst", c.p_burst},
                {"burst_cap", c.burst_cap},
                {"jitter", c.jitter},
                {"jitter_redraw", c.jitter_redraw},
                {"train_size", c.train_size},
                {"test_size", c.test_size},
                {"train_fraction", c.train_fraction},
                {"image_side", c.image_side},
                {"patch_side", c.patch_side},
                {"seed", c.seed}};
}

DatasetConfig config_from_json(const json& j) {
    DatasetConfig c;
    c.n_colors = j.at("n_colors").get<int>();
    c.common_ratio = j.at("common_ratio").get<double>();
    c.p_burst = j.at("p_burst").get<double>();
    c.burst_cap = j.at("burst_cap").get<int>();
    c.jitter = j.at("jitter").get<double>();
    c.jitter_redraw = j.at("jitter_redraw").get<bool>();
    c.train_size = j.at("train_size").get<int>();
    c.test_size = j.at("test_size").get<int>();
    c.train_fraction = j.at("train_fraction").get<double>();
    c.image_side = j.at("image_side").get<int>();
    c.patch_side = j.at("patch_side").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    return c;
}

json split_spec_to_json(const SplitSpec& s) {
    return json{{"palette_size", s.palette_size},
                {"common_ratio", s.common_ratio},
                {"seed", s.seed},
                {"common_colors", s.common_colors},
                {"cube_exclusive", s.cube_exclusive},
                {"cylinder_exclusive", s.cylinder_exclusive}};
}

SplitSpec split_spec_from_json(const json& j) {
    SplitSpec s;
    s.palette_size = j.at("palette_size").get<int>();
    s.common_ratio = j.at("common_ratio").get<double>();
    s.seed = j.at("seed").get<uint64_t>();
    s.common_colors = j.at("common_colors").get<std::vector<int>>();
    s.cube_exclusive = j.at("cube_exclusive").get<std::vector<int>>();
    s.cylinder_exclusive = j.at("cylinder_exclusive").get<std::vector<int>>();
    return s;
}

std::string image_name(size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06zu.png", index);
    return buf;
}

}  // namespace

const std::string& subset_dir(Subset s) { return kSubsetDirs[static_cast<int>(s)]; }

std::filesystem::path DatasetManifest::image_path(Subset s, size_t index) const {
    return root / subset_dir(s) / image_name(index);
}

uint64_t sample_seed(const DatasetConfig& config, Subset subset, uint64_t index) {
    return splitmix64(splitmix64(config.seed ^ 0xaddadada5eedULL) +
                      (static_cast<uint64_t>(subset) + 1) * 0x100000001b3ULL + index);
}

DatasetManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir) {
    config.validate();

    const auto manifest_path = out_dir / "manifest.json";
    if (std::filesystem::exists(manifest_path)) {
        DatasetManifest existing = load_manifest(out_dir);
        if (config_to_json(existing.config) == config_to_json(config)) return existing;
        throw IoError("dataset directory holds a different config: " + out_dir.string());
    }

    const Palette palette = build_palette(divisions_from_color_count(config.n_colors));
    const SplitSpec spec = build_split_spec(palette, config.common_ratio, config.seed);
    if (spec.split_b_empty()) {
        throw EmptySplitError("common_ratio = 1 leaves Split B empty; no OOD set exists");
    }
    const Vocabulary vocab = Vocabulary::build(palette);

    DatasetManifest manifest;
    manifest.config = config;
    manifest.split_spec = spec;
    manifest.vocab_tokens = vocab.tokens();
    manifest.root = out_dir;

    const size_t counts[3] = {static_cast<size_t>(config.effective_train_size()),
                              static_cast<size_t>(config.test_size),
                              static_cast<size_t>(config.test_size)};

    for (Subset subset : kSubsets) {
        const auto dir = out_dir / subset_dir(subset);
        std::filesystem::create_directories(dir);
        std::ofstream records(dir / "records.jsonl");
        if (!records) throw IoError("cannot write " + (dir / "records.jsonl").string());

        DatasetConfig subset_config = config;
        if (subset != Subset::Train) subset_config.p_burst = 0.0;  // burstiness is train-only
        const Split split = subset == Subset::TestOod ? Split::B : Split::A;

        for (size_t i = 0; i < counts[static_cast<int>(subset)]; ++i) {
            const uint64_t seed = sample_seed(config, subset, i);
            Rng rng(seed);
            Scene scene = sample_scene(spec, split, subset_config, rng);
            scene.seed = seed;

            Image img = rasterize(scene, palette, config.image_side);
            write_png(img, dir / image_name(i));

            QuerySequence seq = serialize(scene, vocab);
            json entities = json::array();
            for (const auto& e : scene.entities) {
                entities.push_back(json{{"shape", label(e.shape)},
                                        {"color", e.color},
                                        {"hex", palette.hex(e.color)},
                                        {"material", label(e.material)},
                                        {"size", label(e.size)},
                                        {"x", e.x},
                                        {"y", e.y},
                                        {"radius", e.radius}});
            }
            json line{{"id", i},
                      {"seed", seed},
                      {"split", split == Split::A ? "A" : "B"},
                      {"bursty", scene.bursty},
                      {"burst_colors", scene.burst_colors},
                      {"entities", entities},
                      {"text", seq.surface(vocab)}};
            records << line.dump() << '\n';
        }
        manifest.sizes[subset_dir(subset)] = counts[static_cast<int>(subset)];
    }

    // Manifest written last: its presence marks a complete dataset.
    json m{{"format_version", kManifestVersion},
           {"config", config_to_json(config)},
           {"split_spec", split_spec_to_json(spec)},
           {"vocab", manifest.vocab_tokens},
           {"sizes", manifest.sizes}};
    std::ofstream out(manifest_path);
    if (!out) throw IoError("cannot write " + manifest_path.string());
    out << m.dump(2) << '\n';
    return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& dataset_dir) {
    const auto path = dataset_dir / "manifest.json";
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    json m = json::parse(in);
    DatasetManifest manifest;
    manifest.format_version = m.at("format_version").get<int>();
    if (manifest.format_version != kManifestVersion) {
        throw IntegrityError("unsupported dataset format version in " + path.string());
    }
    manifest.config = config_from_json(m.at("config"));
    manifest.split_spec = split_spec_from_json(m.at("split_spec"));
    manifest.vocab_tokens = m.at("vocab").get<std::vector<std::string>>();
    manifest.sizes = m.at("sizes").get<std::map<std::string, size_t>>();
    manifest.root = dataset_dir;
    return manifest;
}

std::vector<SampleRecord> load_records(const DatasetManifest& manifest, Subset subset) {
    const auto path = manifest.root / subset_dir(subset) / "records.jsonl";
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::vector<SampleRecord> out;
    out.reserve(manifest.size(subset));
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            SampleRecord r;
            r.id = j.at("id").get<uint64_t>();
            r.seed = j.at("seed").get<uint64_t>();
            r.split = j.at("split").get<std::string>() == "A" ? Split::A : Split::B;
            r.scene.seed = r.seed;
            r.scene.bursty = j.at("bursty").get<bool>();
            r.scene.burst_colors = j.at("burst_colors").get<std::vector<int>>();
            for (const auto& ej : j.at("entities")) {
                Entity e;
                e.shape = shape_from_label(ej.at("shape").get<std::string>());
                e.color = ej.at("color").get<int>();
                e.material = material_from_label(ej.at("material").get<std::string>());
                e.size = size_from_label(ej.at("size").get<std::string>());
                e.x = ej.at("x").get<double>();
                e.y = ej.at("y").get<double>();
                e.radius = ej.at("radius").get<double>();
                r.scene.entities.push_back(e);
            }
            r.text = j.at("text").get<std::string>();
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw IntegrityError("corrupted record at " + path.string() + ":" +
                                 std::to_string(line_no) + ": " + e.what());
        }
        ++line_no;
    }
    if (out.size() != manifest.size(subset)) {
        throw IntegrityError("record count mismatch in " + path.string());
    }
    return out;
}

std::map<std::string, JointTable> dataset_attribute_table(const DatasetManifest& manifest,
                                                          Subset subset) {
    const auto records = load_records(manifest, subset);
    const int n_colors = manifest.config.n_colors;

    auto value_of = [&](const Entity& e, Attribute a) -> int {
        switch (a) {
            case Attribute::Size: return static_cast<int>(e.size);
            case Attribute::Color: return e.color;
            case Attribute::Material: return static_cast<int>(e.material);
            case Attribute::Shape: return static_cast<int>(e.shape);
        }
        return 0;
    };
    auto cardinality = [&](Attribute a) {
        return a == Attribute::Color ? n_colors : (a == Attribute::Shape ? 3 : 2);
    };

    std::map<std::string, JointTable> tables;
    for (size_t i = 0; i < kAttributes.size(); ++i) {
        for (size_t j = i + 1; j < kAttributes.size(); ++j) {
            Attribute a = kAttributes[i], b = kAttributes[j];
            const std::string key = label(a) + "_" + label(b);
            tables.emplace(key,
                           JointTable::zeros(label(a), label(b), cardinality(a), cardinality(b)));
        }
    }
    for (const auto& r : records) {
        for (const auto& e : r.scene.entities) {
            for (size_t i = 0; i < kAttributes.size(); ++i) {
                for (size_t j = i + 1; j < kAttributes.size(); ++j) {
                    Attribute a = kAttributes[i], b = kAttributes[j];
                    tables.at(label(a) + "_" + label(b))
                        .counts[value_of(e, a)][value_of(e, b)] += 1;
                }
            }
        }
    }
    return tables;
}

}  // namespace sglab
