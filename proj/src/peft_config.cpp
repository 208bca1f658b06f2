#include "peftbench/peft_config.hpp"

#include <stdexcept>

#include <json.hpp>

namespace peftbench {

namespace {

const char* attn_proj_name(AttnProj p) {
    switch (p) {
        case AttnProj::q: return "q";
        case AttnProj::k: return "k";
        case AttnProj::v: return "v";
        case AttnProj::o: return "o";
    }
    return "?";
}

AttnProj attn_proj_from(const std::string& s) {
    if (s == "q") return AttnProj::q;
    if (s == "k") return AttnProj::k;
    if (s == "v") return AttnProj::v;
    if (s == "o") return AttnProj::o;
    throw std::invalid_argument("unknown attention projection: " + s);
}

const char* ia3_site_name(Ia3Site s) {
    switch (s) {
        case Ia3Site::q_out: return "q-out";
        case Ia3Site::k_out: return "k-out";
        case Ia3Site::v_out: return "v-out";
        case Ia3Site::o_out: return "o-out";
        case Ia3Site::ff_intermediate: return "ff-intermediate";
        case Ia3Site::ff_out: return "ff-out";
    }
    return "?";
}

Ia3Site ia3_site_from(const std::string& s) {
    if (s == "q-out") return Ia3Site::q_out;
    if (s == "k-out") return Ia3Site::k_out;
    if (s == "v-out") return Ia3Site::v_out;
    if (s == "o-out") return Ia3Site::o_out;
    if (s == "ff-intermediate") return Ia3Site::ff_intermediate;
    if (s == "ff-out") return Ia3Site::ff_out;
    throw std::invalid_argument("unknown scaling site: " + s);
}

const char* drop_name(SubmoduleDrop d) {
    switch (d) {
        case SubmoduleDrop::drop_self_attention: return "drop-self-attention";
        case SubmoduleDrop::drop_enc_dec_attention: return "drop-encdec-attention";
        case SubmoduleDrop::drop_query_output: return "drop-query-output";
        case SubmoduleDrop::drop_attention_all: return "drop-attention-all";
        case SubmoduleDrop::drop_dense_activation: return "drop-dense-activation";
    }
    return "?";
}

SubmoduleDrop drop_from(const std::string& s) {
    if (s == "drop-self-attention") return SubmoduleDrop::drop_self_attention;
    if (s == "drop-encdec-attention") return SubmoduleDrop::drop_enc_dec_attention;
    if (s == "drop-query-output") return SubmoduleDrop::drop_query_output;
    if (s == "drop-attention-all") return SubmoduleDrop::drop_attention_all;
    if (s == "drop-dense-activation") return SubmoduleDrop::drop_dense_activation;
    throw std::invalid_argument("unknown submodule drop: " + s);
}

const char* policy_name(LayerPolicy p) {
    switch (p) {
        case LayerPolicy::all: return "all";
        case LayerPolicy::early_half: return "early-half";
        case LayerPolicy::later_half: return "later-half";
        case LayerPolicy::random_half: return "random-half";
    }
    return "?";
}

LayerPolicy policy_from(const std::string& s) {
    if (s == "all") return LayerPolicy::all;
    if (s == "early-half") return LayerPolicy::early_half;
    if (s == "later-half") return LayerPolicy::later_half;
    if (s == "random-half") return LayerPolicy::random_half;
    throw std::invalid_argument("unknown layer policy: " + s);
}

}  // namespace

std::string to_string(PeftMethod m) {
    switch (m) {
        case PeftMethod::full: return "full";
        case PeftMethod::lora: return "lora";
        case PeftMethod::ia3: return "ia3";
        case PeftMethod::bitfit: return "bitfit";
        case PeftMethod::prompt: return "prompt";
    }
    return "?";
}

PeftMethod peft_method_from_string(const std::string& s) {
    if (s == "full") return PeftMethod::full;
    if (s == "lora") return PeftMethod::lora;
    if (s == "ia3") return PeftMethod::ia3;
    if (s == "bitfit") return PeftMethod::bitfit;
    if (s == "prompt") return PeftMethod::prompt;
    throw std::invalid_argument("unknown PEFT method: " + s);
}

void PeftConfig::validate() const {
    // Method-irrelevant fields are still range-checked.
    if (lora_rank < 1) throw std::invalid_argument("PeftConfig: lora_rank must be >= 1");
    if (prompt_len < 1) throw std::invalid_argument("PeftConfig: prompt_len must be >= 1");
    if (method == PeftMethod::lora && lora_targets.empty())
        throw std::invalid_argument("PeftConfig: lora requires at least one attention target");
    if (method == PeftMethod::ia3 && ia3_targets.empty())
        throw std::invalid_argument("PeftConfig: ia3 requires at least one scaling site");
}

std::set<Ia3Site> PeftConfig::ia3_table_consistent_sites() {
    return {Ia3Site::q_out, Ia3Site::k_out, Ia3Site::v_out,
            Ia3Site::o_out, Ia3Site::ff_intermediate, Ia3Site::ff_out};
}

std::set<Ia3Site> PeftConfig::ia3_paper_text_sites() {
    return {Ia3Site::k_out, Ia3Site::v_out, Ia3Site::ff_intermediate};
}

PeftConfig PeftConfig::lora_table_preset() {
    PeftConfig c;
    c.method = PeftMethod::lora;
    c.lora_rank = 3;
    return c;
}

PeftConfig PeftConfig::ia3_table_preset() {
    PeftConfig c;
    c.method = PeftMethod::ia3;
    c.ia3_targets = ia3_table_consistent_sites();
    return c;
}

PeftConfig PeftConfig::bitfit_preset() {
    PeftConfig c;
    c.method = PeftMethod::bitfit;
    return c;
}

PeftConfig PeftConfig::prompt_preset(std::size_t len) {
    PeftConfig c;
    c.method = PeftMethod::prompt;
    c.prompt_len = len;
    return c;
}

PeftConfig parse_peft_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    PeftConfig c;
    if (j.contains("method")) c.method = peft_method_from_string(j["method"].get<std::string>());
    if (j.contains("lora_rank")) c.lora_rank = j["lora_rank"].get<std::size_t>();
    if (j.contains("lora_targets")) {
        c.lora_targets.clear();
        for (const auto& t : j["lora_targets"]) c.lora_targets.insert(attn_proj_from(t.get<std::string>()));
    }
    if (j.contains("ia3_preset")) {
        const std::string p = j["ia3_preset"].get<std::string>();
        if (p == "table-consistent")
            c.ia3_targets = PeftConfig::ia3_table_consistent_sites();
        else if (p == "paper-text")
            c.ia3_targets = PeftConfig::ia3_paper_text_sites();
        else
            throw std::invalid_argument("unknown ia3 preset: " + p);
    }
    if (j.contains("ia3_targets")) {
        c.ia3_targets.clear();
        for (const auto& t : j["ia3_targets"]) c.ia3_targets.insert(ia3_site_from(t.get<std::string>()));
    }
    if (j.contains("prompt_len")) c.prompt_len = j["prompt_len"].get<std::size_t>();
    if (j.contains("layer_selection")) {
        const auto& ls = j["layer_selection"];
        if (ls.contains("policy")) c.layer_selection.policy = policy_from(ls["policy"].get<std::string>());
        if (ls.contains("seed")) c.layer_selection.seed = ls["seed"].get<std::uint64_t>();
    }
    if (j.contains("submodule_drops")) {
        for (const auto& d : j["submodule_drops"]) c.submodule_drops.insert(drop_from(d.get<std::string>()));
    }
    c.validate();
    return c;
}

std::string peft_to_json(const PeftConfig& c) {
    nlohmann::json j;
    j["method"] = to_string(c.method);
    j["lora_rank"] = c.lora_rank;
    auto targets = nlohmann::json::array();
    for (auto t : c.lora_targets) targets.push_back(attn_proj_name(t));
    j["lora_targets"] = targets;
    auto sites = nlohmann::json::array();
    for (auto s : c.ia3_targets) sites.push_back(ia3_site_name(s));
    j["ia3_targets"] = sites;
    j["prompt_len"] = c.prompt_len;
    j["layer_selection"] = {{"policy", policy_name(c.layer_selection.policy)},
                            {"seed", c.layer_selection.seed}};
    auto drops = nlohmann::json::array();
    for (auto d : c.submodule_drops) drops.push_back(drop_name(d));
    j["submodule_drops"] = drops;
    return j.dump();
}

}  // namespace peftbench
