#pragma once

#include <string>
#include <vector>

#include "peftbench/arch.hpp"
#include "peftbench/peft_config.hpp"

namespace peftbench {

enum class StackSide { encoder, decoder };
enum class HostKind { self_attention, enc_dec_attention, feed_forward };

// One adapter host: a named submodule of one block.
struct Host {
    StackSide stack;
    std::size_t block;
    HostKind kind;

    std::string path() const;
    bool operator<(const Host& other) const { return path() < other.path(); }
    bool operator==(const Host& other) const {
        return stack == other.stack && block == other.block && kind == other.kind;
    }
};

// Deterministic host set for (arch, cfg): the method's candidate submodules,
// restricted first by the layer-selection policy (per stack), then by the
// submodule drops. Throws std::invalid_argument when the result is empty.
std::vector<Host> select_hosts(const ArchConfig& arch, const PeftConfig& cfg);

// Block indices chosen by a layer policy for a stack of n_layers blocks.
std::vector<std::size_t> select_blocks(LayerPolicy policy, std::size_t n_layers,
                                       std::uint64_t seed, StackSide stack);

// Attention projections that keep adapters under the configured drops.
std::set<AttnProj> effective_attn_targets(const PeftConfig& cfg);
// Activation-scaling sites that survive the configured drops.
std::set<Ia3Site> effective_ia3_sites(const PeftConfig& cfg);

}  // namespace peftbench
