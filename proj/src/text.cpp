#include "sglab/text.hpp"

#include <sstream>

namespace sglab {

namespace {
const std::string kAttributeLabels[] = {"size", "color", "material", "shape"};
}

const std::string& label(Attribute a) { return kAttributeLabels[static_cast<int>(a)]; }

Attribute attribute_from_label(const std::string& s) {
    for (auto a : kAttributes)
        if (label(a) == s) return a;
    throw ConfigError("unknown attribute label: " + s);
}

Vocabulary Vocabulary::build(const Palette& palette) {
    std::vector<std::string> tokens = {"[PAD]", "[MASK]", "[SEP]"};
    for (auto z : kSizes) tokens.push_back(label(z));
    for (int i = 0; i < palette.size(); ++i) tokens.push_back(palette.hex(i));
    for (auto m : kMaterials) tokens.push_back(label(m));
    for (auto s : kShapes) tokens.push_back(label(s));
    Vocabulary v = from_tokens(std::move(tokens));
    return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    Vocabulary v;
    v.n_colors_ = static_cast<int>(tokens.size()) - 10;
    if (v.n_colors_ < 1) throw ConfigError("vocabulary too small to hold any color token");
    v.tokens_ = std::move(tokens);
    for (int i = 0; i < static_cast<int>(v.tokens_.size()); ++i) {
        if (!v.ids_.emplace(v.tokens_[i], i).second) {
            throw ConfigError("duplicate vocabulary token: " + v.tokens_[i]);
        }
    }
    return v;
}

int Vocabulary::id(const std::string& token) const {
    auto it = ids_.find(token);
    if (it == ids_.end()) throw ConfigError("token not in vocabulary: " + token);
    return it->second;
}

TokenClass Vocabulary::token_class(int id) const {
    if (id < 0 || id >= size()) throw ConfigError("token id out of range");
    if (id < 3) return TokenClass::Special;
    if (id < 5) return TokenClass::Size;
    if (id < 5 + n_colors_) return TokenClass::Color;
    if (id < 7 + n_colors_) return TokenClass::Material;
    return TokenClass::Shape;
}

int Vocabulary::attribute_id(const Entity& e, Attribute a) const {
    switch (a) {
        case Attribute::Size: return size_id(e.size);
        case Attribute::Color: return color_id(e.color);
        case Attribute::Material: return material_id(e.material);
        case Attribute::Shape: return shape_id(e.shape);
    }
    throw ConfigError("bad attribute");
}

std::string QuerySequence::surface(const Vocabulary& vocab) const {
    std::ostringstream out;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i) out << ' ';
        // Surface strings keep the true tokens; masking is a runtime view.
        int id = ids[i];
        for (const auto& m : masks) {
            if (m.position == static_cast<int>(i)) {
                id = m.true_id;
                break;
            }
        }
        out << vocab.token(id);
    }
    return out.str();
}

QuerySequence serialize(const Scene& scene, const Vocabulary& vocab) {
    QuerySequence seq;
    const int n = static_cast<int>(scene.entities.size());
    seq.ids.reserve(n * kTokensPerEntity + (n - 1));
    for (int i = 0; i < n; ++i) {
        if (i) {
            seq.ids.push_back(Vocabulary::kSep);
            seq.entity_index.push_back(-1);
        }
        const Entity& e = scene.entities[i];
        if (e.color < 0 || e.color >= vocab.n_colors()) {
            throw ConfigError("entity color index outside the vocabulary palette");
        }
        for (Attribute a : kAttributes) {
            seq.ids.push_back(vocab.attribute_id(e, a));
            seq.entity_index.push_back(i);
        }
    }
    return seq;
}

QuerySequence parse_surface(const std::string& text, const Vocabulary& vocab) {
    QuerySequence seq;
    std::istringstream in(text);
    std::string tok;
    int entity = 0;
    int field = 0;
    while (in >> tok) {
        int id = vocab.id(tok);
        if (id == Vocabulary::kSep) {
            seq.entity_index.push_back(-1);
            ++entity;
            field = 0;
        } else {
            seq.entity_index.push_back(entity);
            ++field;
        }
        seq.ids.push_back(id);
    }
    if (field != kTokensPerEntity) throw IntegrityError("truncated entity in surface text");
    return seq;
}

QuerySequence mask_for_training(const QuerySequence& seq, double p_mask, Rng& rng) {
    if (!(p_mask > 0.0 && p_mask < 1.0)) throw ConfigError("p_mask must lie in (0,1)");
    for (int attempt = 0; attempt < 2; ++attempt) {
        QuerySequence out = seq;
        out.masks.clear();
        for (int i = 0; i < out.length(); ++i) {
            if (out.ids[i] == Vocabulary::kSep) continue;
            if (bernoulli(rng, p_mask)) {
                out.masks.push_back({i, out.ids[i]});
                out.ids[i] = Vocabulary::kMask;
            }
        }
        if (!out.masks.empty() || attempt == 1) return out;
    }
    return seq;  // unreachable
}

QuerySequence mask_for_eval(const QuerySequence& seq, int entity_index, Attribute attribute) {
    const int pos = attribute_position(entity_index, attribute);
    if (entity_index < 0 || pos >= seq.length()) {
        throw ConfigError("entity index out of range for eval masking");
    }
    QuerySequence out = seq;
    out.masks = {{pos, out.ids[pos]}};
    out.ids[pos] = Vocabulary::kMask;
    return out;
}

}  // namespace sglab
