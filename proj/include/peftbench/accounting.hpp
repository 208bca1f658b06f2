#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "peftbench/arch.hpp"
#include "peftbench/peft_config.hpp"

namespace peftbench {

// Purely symbolic parameter counts; no tensors are ever allocated.
struct CountReport {
    std::uint64_t total_params = 0;
    std::uint64_t trainable_params = 0;
    // path-pattern -> parameter count; sums to trainable_params
    std::vector<std::pair<std::string, std::uint64_t>> breakdown;

    std::string render_text() const;
    std::string render_csv() const;
};

// Closed-form total over embeddings, output head, per-block attention /
// feed-forward / norm weights, relative-position bias tables and final
// stack norms. Exact integer arithmetic.
std::uint64_t count_total(const ArchConfig& arch);

// Trainable-set size under the PEFT method, layer selection and drops.
// Matches the brute-force enumeration over a built model exactly.
// Throws std::invalid_argument when the trainable set is empty.
CountReport count_trainable(const ArchConfig& arch, const PeftConfig& cfg);

}  // namespace peftbench
