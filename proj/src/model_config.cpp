// SPDX-License-Identifier: Apache-2.0
#include "pyabbrev/model_config.hpp"

#include <sstream>
#include <stdexcept>

#include "pyabbrev/errors.hpp"

namespace pyab {

void ModelConfig::validate() const {
  if (num_layers < 1) throw std::invalid_argument("num_layers must be >= 1");
  if (hidden_dim < 1 || num_heads < 1 || ffn_dim < 1)
    throw std::invalid_argument("hidden_dim, num_heads and ffn_dim must be positive");
  if (hidden_dim % num_heads != 0)
    throw std::invalid_argument("hidden_dim must be divisible by num_heads");
  if (vocab_size < 31)
    throw std::invalid_argument("vocab_size must cover the 31 special tokens");
  if (max_position < 3)
    throw std::invalid_argument("max_position must be at least 3");
  for (const auto& [layer, spec] : moe_plan) {
    if (layer < 0 || layer >= num_layers)
      throw std::invalid_argument("moe_plan layer index " + std::to_string(layer) +
                                  " out of range");
    if (spec.num_experts < 2)
      throw std::invalid_argument("MoE layers need at least 2 routed experts");
    if (spec.top_k < 1 || spec.top_k > spec.num_experts)
      throw std::invalid_argument("top_k must be in [1, num_experts]");
  }
}

ModelConfig ModelConfig::desk(int vocab_size) {
  ModelConfig c;
  c.num_layers = 4;
  c.hidden_dim = 64;
  c.num_heads = 4;
  c.ffn_dim = 256;
  c.vocab_size = vocab_size;
  c.max_position = 128;
  c.moe_plan = {{1, {2, 1}}, {3, {4, 2}}};
  return c;
}

ModelConfig ModelConfig::replica_16l(int vocab_size) {
  ModelConfig c;
  c.num_layers = 16;
  c.hidden_dim = 768;
  c.num_heads = 12;
  c.ffn_dim = 3072;
  c.vocab_size = vocab_size;
  c.max_position = 512;
  c.moe_plan = {{1, {2, 1}}, {3, {2, 1}},  {5, {2, 1}},  {7, {4, 1}},
                {9, {8, 2}}, {11, {8, 2}}, {13, {8, 2}}, {15, {8, 2}}};
  return c;
}

ModelConfig ModelConfig::preset(const std::string& name, int vocab_size) {
  if (name == "desk") return desk(vocab_size);
  if (name == "paper-replica-16L") return replica_16l(vocab_size);
  throw std::invalid_argument("unknown model preset '" + name +
                              "' (expected 'desk' or 'paper-replica-16L')");
}

std::string moe_plan_to_string(const std::map<int, MoeSpec>& plan) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [layer, spec] : plan) {
    if (!first) out << ',';
    first = false;
    out << layer << ':' << spec.num_experts << 'x' << spec.top_k;
  }
  return out.str();
}

std::map<int, MoeSpec> moe_plan_from_string(const std::string& text) {
  std::map<int, MoeSpec> plan;
  if (text.empty()) return plan;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    int layer, experts, topk;
    char colon, x;
    std::istringstream part(item);
    if (!(part >> layer >> colon >> experts >> x >> topk) || colon != ':' ||
        x != 'x' || !part.eof())
      throw std::invalid_argument("bad moe_plan entry '" + item +
                                  "' (expected layer:expertsxtop_k)");
    if (!plan.emplace(layer, MoeSpec{experts, topk}).second)
      throw std::invalid_argument("duplicate moe_plan layer " +
                                  std::to_string(layer));
  }
  return plan;
}

std::string to_text(const ModelConfig& c) {
  std::ostringstream out;
  out << "num_layers=" << c.num_layers << '\n'
      << "hidden_dim=" << c.hidden_dim << '\n'
      << "num_heads=" << c.num_heads << '\n'
      << "ffn_dim=" << c.ffn_dim << '\n'
      << "vocab_size=" << c.vocab_size << '\n'
      << "max_position=" << c.max_position << '\n'
      << "moe_plan=" << moe_plan_to_string(c.moe_plan) << '\n';
  return out.str();
}

ModelConfig config_from_text(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("bad config line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "num_layers") c.num_layers = std::stoi(value);
    else if (key == "hidden_dim") c.hidden_dim = std::stoi(value);
    else if (key == "num_heads") c.num_heads = std::stoi(value);
    else if (key == "ffn_dim") c.ffn_dim = std::stoi(value);
    else if (key == "vocab_size") c.vocab_size = std::stoi(value);
    else if (key == "max_position") c.max_position = std::stoi(value);
    else if (key == "moe_plan") c.moe_plan = moe_plan_from_string(value);
    else throw DataError("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

}  // namespace pyab
