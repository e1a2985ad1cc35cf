// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>

#include "pyabbrev/checkpoint.hpp"
#include "test_util.hpp"

using namespace pyab;

namespace {

ModelParams<float> small_model(std::uint64_t seed = 5) {
  ModelConfig c;
  c.num_layers = 3;
  c.hidden_dim = 8;
  c.num_heads = 2;
  c.ffn_dim = 12;
  c.vocab_size = 40;
  c.max_position = 16;
  c.moe_plan = {{1, {2, 1}}, {2, {4, 2}}};
  return init_model<float>(c, seed);
}

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("save then load reproduces every tensor bitwise") {
  auto params = small_model();
  const auto path = testutil::write_temp("", ".ckpt");
  save_checkpoint(params, path);
  auto loaded = load_checkpoint<float>(path);

  CHECK(loaded.config == params.config);
  auto a = named_tensors(params);
  auto b = named_tensors(loaded);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].flat() == b[i].flat());  // exact equality, no tolerance
  }
}

TEST_CASE("the MoE plan survives the round trip") {
  auto params = small_model();
  const auto path = testutil::write_temp("", ".ckpt");
  save_checkpoint(params, path);
  const auto loaded = load_checkpoint<float>(path);
  REQUIRE(loaded.config.moe_plan.size() == 2);
  CHECK(loaded.config.moe_plan.at(1) == MoeSpec{2, 1});
  CHECK(loaded.config.moe_plan.at(2) == MoeSpec{4, 2});
  CHECK(loaded.layers[1].moe.has_value());
  CHECK(loaded.layers[2].moe->num_experts() == 4);
}

TEST_CASE("truncated files fail cleanly") {
  auto params = small_model();
  const auto path = testutil::write_temp("", ".ckpt");
  save_checkpoint(params, path);
  auto bytes = slurp(path);
  bytes.resize(bytes.size() / 2);
  const auto cut = testutil::write_temp("", ".ckpt");
  dump(cut, bytes);
  CHECK_THROWS_AS(load_checkpoint<float>(cut), CheckpointTruncatedError);
}

TEST_CASE("corrupted payload fails the checksum") {
  auto params = small_model();
  const auto path = testutil::write_temp("", ".ckpt");
  save_checkpoint(params, path);
  auto bytes = slurp(path);
  bytes[bytes.size() / 2] ^= 0x5A;
  const auto bad = testutil::write_temp("", ".ckpt");
  dump(bad, bytes);
  CHECK_THROWS_AS(load_checkpoint<float>(bad), CheckpointChecksumError);
}

TEST_CASE("version and magic mismatches are distinct errors") {
  auto params = small_model();
  const auto path = testutil::write_temp("", ".ckpt");
  save_checkpoint(params, path);
  auto bytes = slurp(path);

  auto wrong_version = bytes;
  wrong_version[8] = 99;  // version field follows the 8-byte magic
  const auto vpath = testutil::write_temp("", ".ckpt");
  dump(vpath, wrong_version);
  CHECK_THROWS_AS(load_checkpoint<float>(vpath), CheckpointVersionError);

  auto wrong_magic = bytes;
  wrong_magic[0] = 'X';
  const auto mpath = testutil::write_temp("", ".ckpt");
  dump(mpath, wrong_magic);
  CHECK_THROWS_AS(load_checkpoint<float>(mpath), CheckpointFormatError);
}

TEST_CASE("dtype mismatch between float and double checkpoints is caught") {
  ModelConfig c;
  c.num_layers = 1;
  c.hidden_dim = 4;
  c.num_heads = 2;
  c.ffn_dim = 8;
  c.vocab_size = 33;
  c.max_position = 8;
  const auto params = init_model<double>(c, 2);
  const auto path = testutil::write_temp("", ".ckpt");
  save_checkpoint(params, path);
  CHECK_THROWS_AS(load_checkpoint<float>(path), CheckpointFormatError);
  CHECK(load_checkpoint<double>(path).config == c);
}
