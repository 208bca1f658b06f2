#include "peftbench/arch.hpp"

#include <stdexcept>

#include <json.hpp>

namespace peftbench {

void ArchConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v == 0) throw std::invalid_argument(std::string("ArchConfig: ") + name + " must be >= 1");
    };
    positive(vocab_size, "vocab_size");
    positive(d_model, "d_model");
    positive(n_heads, "n_heads");
    positive(d_kv, "d_kv");
    positive(d_ff, "d_ff");
    // 0 disables the bias table; the bucketing scheme needs at least 4.
    if (rel_pos_buckets != 0 && rel_pos_buckets < 4)
        throw std::invalid_argument("ArchConfig: rel_pos_buckets must be 0 or >= 4");
}

ArchConfig ArchConfig::xl_preset() {
    ArchConfig c;
    c.vocab_size = 32128;
    c.d_model = 2048;
    c.n_heads = 32;
    c.d_kv = 64;
    c.d_ff = 5120;
    c.n_encoder_layers = 24;
    c.n_decoder_layers = 24;
    c.ff_variant = FfVariant::gated;
    c.rel_pos_buckets = 32;
    return c;
}

ArchConfig ArchConfig::desk_preset() {
    ArchConfig c;
    c.vocab_size = 64;
    c.d_model = 32;
    c.n_heads = 4;
    c.d_kv = 8;
    c.d_ff = 64;
    c.n_encoder_layers = 2;
    c.n_decoder_layers = 2;
    c.ff_variant = FfVariant::gated;
    c.rel_pos_buckets = 8;
    return c;
}

ArchConfig parse_arch_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ArchConfig c;
    if (j.contains("preset")) {
        const std::string p = j["preset"].get<std::string>();
        if (p == "xl")
            c = ArchConfig::xl_preset();
        else if (p == "desk")
            c = ArchConfig::desk_preset();
        else
            throw std::invalid_argument("unknown arch preset: " + p);
    }
    if (j.contains("vocab_size")) c.vocab_size = j["vocab_size"].get<std::size_t>();
    if (j.contains("d_model")) c.d_model = j["d_model"].get<std::size_t>();
    if (j.contains("n_heads")) c.n_heads = j["n_heads"].get<std::size_t>();
    if (j.contains("d_kv")) c.d_kv = j["d_kv"].get<std::size_t>();
    if (j.contains("d_ff")) c.d_ff = j["d_ff"].get<std::size_t>();
    if (j.contains("n_encoder_layers")) c.n_encoder_layers = j["n_encoder_layers"].get<std::size_t>();
    if (j.contains("n_decoder_layers")) c.n_decoder_layers = j["n_decoder_layers"].get<std::size_t>();
    if (j.contains("rel_pos_buckets")) c.rel_pos_buckets = j["rel_pos_buckets"].get<std::size_t>();
    if (j.contains("ff_variant")) {
        const std::string v = j["ff_variant"].get<std::string>();
        if (v == "gated")
            c.ff_variant = FfVariant::gated;
        else if (v == "ungated")
            c.ff_variant = FfVariant::ungated;
        else
            throw std::invalid_argument("ff_variant must be 'gated' or 'ungated', got: " + v);
    }
    c.validate();
    return c;
}

std::string arch_to_json(const ArchConfig& c) {
    nlohmann::json j;
    j["vocab_size"] = c.vocab_size;
    j["d_model"] = c.d_model;
    j["n_heads"] = c.n_heads;
    j["d_kv"] = c.d_kv;
    j["d_ff"] = c.d_ff;
    j["n_encoder_layers"] = c.n_encoder_layers;
    j["n_decoder_layers"] = c.n_decoder_layers;
    j["ff_variant"] = c.ff_variant == FfVariant::gated ? "gated" : "ungated";
    j["rel_pos_buckets"] = c.rel_pos_buckets;
    return j.dump();
}

}  // namespace peftbench
