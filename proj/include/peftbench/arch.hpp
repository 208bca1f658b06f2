#pragma once

#include <cstdint>
#include <string>

namespace peftbench {

enum class FfVariant { gated, ungated };

// Symbolic description of a T5-style encoder-decoder. Used both to build
// trainable micro-models and to count parameters of models that are never
// instantiated (the XL preset exists purely for accounting).
struct ArchConfig {
    std::size_t vocab_size = 64;
    std::size_t d_model = 32;
    std::size_t n_heads = 4;
    std::size_t d_kv = 8;  // per-head dimension
    std::size_t d_ff = 64;
    std::size_t n_encoder_layers = 2;
    std::size_t n_decoder_layers = 2;
    FfVariant ff_variant = FfVariant::gated;
    std::size_t rel_pos_buckets = 8;

    std::size_t d_inner() const { return n_heads * d_kv; }

    void validate() const;

    // FLAN-T5-XL, accounting only: 2,849,757,184 total parameters.
    static ArchConfig xl_preset();
    // Small enough to train on a desktop CPU in seconds.
    static ArchConfig desk_preset();
};

ArchConfig parse_arch_json(const std::string& text);
std::string arch_to_json(const ArchConfig& cfg);

}  // namespace peftbench
