#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "sglab/latent.hpp"
#include "sglab/rng.hpp"
#include "sglab/scene.hpp"

namespace sglab {

enum class Attribute { Size, Color, Material, Shape };
inline constexpr std::array<Attribute, 4> kAttributes{Attribute::Size, Attribute::Color,
                                                      Attribute::Material, Attribute::Shape};
const std::string& label(Attribute a);
Attribute attribute_from_label(const std::string& s);

// Tokens per entity in serialization order (size, color, material, shape),
// plus one [SEP] between entities.
inline constexpr int kTokensPerEntity = 4;

enum class TokenClass { Special, Size, Color, Material, Shape };

// Fixed layout: [PAD] [MASK] [SEP] ++ sizes ++ color hex tokens ++ materials
// ++ shapes. Deterministic given the palette.
class Vocabulary {
public:
    static Vocabulary build(const Palette& palette);
    static Vocabulary from_tokens(std::vector<std::string> tokens);

    int size() const { return static_cast<int>(tokens_.size()); }
    const std::string& token(int id) const { return tokens_.at(id); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    int id(const std::string& token) const;

    static constexpr int kPad = 0;
    static constexpr int kMask = 1;
    static constexpr int kSep = 2;

    int size_id(ObjectSize z) const { return 3 + static_cast<int>(z); }
    int color_id(int palette_index) const { return 5 + palette_index; }
    int material_id(Material m) const { return 5 + n_colors_ + static_cast<int>(m); }
    int shape_id(Shape s) const { return 7 + n_colors_ + static_cast<int>(s); }

    int n_colors() const { return n_colors_; }
    TokenClass token_class(int id) const;
    int attribute_id(const Entity& e, Attribute a) const;

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
    int n_colors_ = 0;
};

struct MaskSite {
    int position = 0;
    int true_id = 0;
    bool operator==(const MaskSite&) const = default;
};

struct QuerySequence {
    std::vector<int> ids;            // [MASK] substituted at masked positions
    std::vector<MaskSite> masks;     // recorded positions and true tokens
    std::vector<int> entity_index;   // per position; -1 at [SEP]

    int length() const { return static_cast<int>(ids.size()); }
    std::string surface(const Vocabulary& vocab) const;  // whitespace-joined tokens
};

// Position of an entity attribute inside the serialized sequence
// (blocks of 4 tokens + [SEP]).
inline int attribute_position(int entity_index, Attribute a) {
    return entity_index * (kTokensPerEntity + 1) + static_cast<int>(a);
}

// Unmasked serialization, entity order = scene order.
QuerySequence serialize(const Scene& scene, const Vocabulary& vocab);

QuerySequence parse_surface(const std::string& text, const Vocabulary& vocab);

// Independently masks each non-[SEP] token with probability p_mask.
// All-clear draws are retried once, then returned as-is.
QuerySequence mask_for_training(const QuerySequence& seq, double p_mask, Rng& rng);

// Masks exactly the named attribute of the named entity.
QuerySequence mask_for_eval(const QuerySequence& seq, int entity_index, Attribute attribute);

}  // namespace sglab
