#include <doctest.h>

#include <set>

#include "sglab/text.hpp"

using namespace sglab;

namespace {

Entity make_entity(ObjectSize size, int color, Material material, Shape shape) {
    Entity e;
    e.size = size;
    e.color = color;
    e.material = material;
    e.shape = shape;
    e.radius = size_radius(size);
    e.x = e.y = 0.5;
    return e;
}

}  // namespace

TEST_CASE("vocabulary layout and size") {
    Palette p = build_palette(2);
    Vocabulary v = Vocabulary::build(p);
    CHECK(v.size() == 18);  // 3 + 2 + 8 + 2 + 3
    CHECK(v.token(Vocabulary::kPad) == "[PAD]");
    CHECK(v.token(Vocabulary::kMask) == "[MASK]");
    CHECK(v.token(Vocabulary::kSep) == "[SEP]");
    CHECK(v.token(3) == "small");
    CHECK(v.token(5) == "#000000");
    CHECK(v.token(13) == "rubber");
    CHECK(v.token(15) == "sphere");
    CHECK(v.token(17) == "cylinder");
    CHECK(v.id("#ffffff") == 12);
    CHECK(v.token_class(4) == TokenClass::Size);
    CHECK(v.token_class(9) == TokenClass::Color);
    CHECK(v.token_class(14) == TokenClass::Material);
    CHECK(v.token_class(16) == TokenClass::Shape);
    CHECK_THROWS_AS(v.id("#123456"), ConfigError);

    Vocabulary v2 = Vocabulary::build(p);
    CHECK(v.tokens() == v2.tokens());
}

TEST_CASE("serialize one entity in the fixed field order") {
    Palette p = build_palette(3);  // contains #00ff80 = (0,255,128)
    Vocabulary v = Vocabulary::build(p);
    int color = -1;
    for (int i = 0; i < p.size(); ++i) {
        if (p.hex(i) == "#00ff80") color = i;
    }
    REQUIRE(color >= 0);

    Scene scene{{make_entity(ObjectSize::Small, color, Material::Rubber, Shape::Cube)}, false, {}, 0};
    QuerySequence seq = serialize(scene, v);
    CHECK(seq.length() == 4);
    CHECK(seq.surface(v) == "small #00ff80 rubber cube");
    CHECK(seq.entity_index == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("seven entities serialize to 34 tokens") {
    Palette p = build_palette(2);
    Vocabulary v = Vocabulary::build(p);
    Scene scene;
    for (int i = 0; i < 7; ++i) {
        scene.entities.push_back(make_entity(i % 2 ? ObjectSize::Small : ObjectSize::Large, i,
                                             i % 2 ? Material::Metal : Material::Rubber,
                                             kShapes[i % 3]));
    }
    QuerySequence seq = serialize(scene, v);
    CHECK(seq.length() == 34);  // 7*4 + 6 separators
    int seps = 0;
    for (int id : seq.ids) seps += id == Vocabulary::kSep;
    CHECK(seps == 6);
}

TEST_CASE("serialization inverts through the surface string") {
    Palette p = build_palette(2);
    Vocabulary v = Vocabulary::build(p);
    Scene scene;
    scene.entities.push_back(make_entity(ObjectSize::Large, 3, Material::Metal, Shape::Cylinder));
    scene.entities.push_back(make_entity(ObjectSize::Small, 5, Material::Rubber, Shape::Sphere));
    QuerySequence seq = serialize(scene, v);
    QuerySequence parsed = parse_surface(seq.surface(v), v);
    CHECK(parsed.ids == seq.ids);
    CHECK(parsed.entity_index == seq.entity_index);
}

TEST_CASE("serialize rejects colors outside the vocabulary") {
    Palette p = build_palette(2);
    Vocabulary v = Vocabulary::build(p);
    Scene scene{{make_entity(ObjectSize::Small, 99, Material::Rubber, Shape::Cube)}, false, {}, 0};
    CHECK_THROWS_AS(serialize(scene, v), ConfigError);
}

TEST_CASE("training masks hit the expected rate and never touch [SEP]") {
    Palette p = build_palette(2);
    Vocabulary v = Vocabulary::build(p);
    Scene scene;
    for (int i = 0; i < 10; ++i) {
        scene.entities.push_back(
            make_entity(kSizes[i % 2], i % 8, kMaterials[(i / 2) % 2], kShapes[i % 3]));
    }
    QuerySequence seq = serialize(scene, v);

    Rng rng = make_rng(17);
    int64_t masked = 0, maskable = 0;
    for (int trial = 0; trial < 300; ++trial) {
        QuerySequence out = mask_for_training(seq, 0.15, rng);
        for (const auto& site : out.masks) {
            CHECK(seq.ids[site.position] != Vocabulary::kSep);
            CHECK(out.ids[site.position] == Vocabulary::kMask);
            CHECK(site.true_id == seq.ids[site.position]);
        }
        masked += static_cast<int64_t>(out.masks.size());
        maskable += 40;  // 10 entities * 4 tokens
    }
    const double rate = static_cast<double>(masked) / static_cast<double>(maskable);
    CHECK(rate > 0.13);
    CHECK(rate < 0.17);

    Rng r1 = make_rng(4), r2 = make_rng(4);
    CHECK(mask_for_training(seq, 0.15, r1).ids == mask_for_training(seq, 0.15, r2).ids);
    CHECK_THROWS_AS(mask_for_training(seq, 0.0, rng), ConfigError);
}

TEST_CASE("eval masking targets a single attribute position") {
    Palette p = build_palette(2);
    Vocabulary v = Vocabulary::build(p);
    Scene scene;
    scene.entities.push_back(make_entity(ObjectSize::Small, 0, Material::Rubber, Shape::Cube));
    scene.entities.push_back(make_entity(ObjectSize::Large, 1, Material::Metal, Shape::Sphere));
    scene.entities.push_back(make_entity(ObjectSize::Small, 2, Material::Metal, Shape::Cylinder));
    QuerySequence seq = serialize(scene, v);

    QuerySequence masked = mask_for_eval(seq, 0, Attribute::Shape);
    REQUIRE(masked.masks.size() == 1);
    CHECK(masked.masks[0].position == 3);
    CHECK(masked.masks[0].true_id == v.shape_id(Shape::Cube));
    CHECK(masked.ids[3] == Vocabulary::kMask);

    // restoring the true token recovers the original sequence
    QuerySequence restored = masked;
    restored.ids[restored.masks[0].position] = restored.masks[0].true_id;
    CHECK(restored.ids == seq.ids);

    // two queries for the same entity differ only at their masked positions
    QuerySequence m2 = mask_for_eval(seq, 0, Attribute::Color);
    int diffs = 0;
    for (int i = 0; i < seq.length(); ++i) diffs += masked.ids[i] != m2.ids[i];
    CHECK(diffs == 2);

    CHECK(mask_for_eval(seq, 2, Attribute::Size).masks[0].position == 10);
    CHECK_THROWS_AS(mask_for_eval(seq, 5, Attribute::Shape), ConfigError);
}

TEST_CASE("resolvability makes every eval query unambiguous") {
    DatasetConfig c;
    c.n_colors = 8;
    c.seed = 5;
    SplitSpec spec = build_split_spec(build_palette(2), 0.0, 5);
    Rng rng(31);
    for (int i = 0; i < 30; ++i) {
        Scene scene = sample_scene(spec, Split::A, c, rng);
        for (size_t e = 0; e < scene.entities.size(); ++e) {
            for (Attribute a : kAttributes) {
                // brute force: entities matching the three unmasked attributes
                int matches = 0;
                for (const auto& other : scene.entities) {
                    bool same = true;
                    for (Attribute b : kAttributes) {
                        if (b == a) continue;
                        Entity lhs = scene.entities[e];
                        if ((b == Attribute::Size && lhs.size != other.size) ||
                            (b == Attribute::Color && lhs.color != other.color) ||
                            (b == Attribute::Material && lhs.material != other.material) ||
                            (b == Attribute::Shape && lhs.shape != other.shape)) {
                            same = false;
                            break;
                        }
                    }
                    matches += same;
                }
                CHECK(matches == 1);
            }
        }
    }
}
