// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

namespace pyab {

struct MoeSpec {
  int num_experts = 2;
  int top_k = 1;

  bool operator==(const MoeSpec&) const = default;
};

/**
 * Encoder shape. Layers listed in moe_plan carry a mixture-of-experts
 * block in place of the dense FFN; all other layers are dense.
 */
struct ModelConfig {
  int num_layers = 4;
  int hidden_dim = 64;
  int num_heads = 4;
  int ffn_dim = 256;
  int vocab_size = 0;
  int max_position = 128;
  std::map<int, MoeSpec> moe_plan;

  void validate() const;  // throws std::invalid_argument

  bool operator==(const ModelConfig&) const = default;

  // 4-layer miniature with a small expert pyramid.
  static ModelConfig desk(int vocab_size);

  // 16-layer plan with the full expert pyramid: layers {1,3,5} route over
  // 2 experts top-1, layer {7} over 4 top-1, layers {9,11,13,15} over
  // 8 top-2. Hidden size 768, 12 heads.
  static ModelConfig replica_16l(int vocab_size);

  // Resolves a preset by its public name: "desk" or "paper-replica-16L".
  static ModelConfig preset(const std::string& name, int vocab_size);
};

// Canonical key=value text used in checkpoints and config echo.
std::string to_text(const ModelConfig& config);
ModelConfig config_from_text(const std::string& text);

// moe_plan wire form: "1:2x1,3:4x2" (layer:expertsxtop_k, ascending).
std::string moe_plan_to_string(const std::map<int, MoeSpec>& plan);
std::map<int, MoeSpec> moe_plan_from_string(const std::string& text);

}  // namespace pyab
