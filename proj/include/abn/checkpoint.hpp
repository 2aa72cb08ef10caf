#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "json.hpp"

#include "abn/models.hpp"

namespace abn {

/// On-disk layout: one line of compact JSON (the header, which lists the
/// shape of every block under "shapes"), then each block's entries as
/// little-endian IEEE-754 doubles in row-major order. Round trips are bit-exact.
struct CheckpointBlob {
  nlohmann::json header;
  std::vector<Tensor> blocks;
};

void write_blob(std::ostream& out, nlohmann::json header, const std::vector<const Tensor*>& blocks);
CheckpointBlob read_blob(std::istream& in);

/// Model-only checkpoint: header {model, shapes, seed, depth}.
void save_params(const std::filesystem::path& path, const ModelParams& params, std::uint64_t seed);
ModelParams load_params(const std::filesystem::path& path, std::uint64_t* seed = nullptr);

nlohmann::json params_header(const ModelParams& params, std::uint64_t seed);
ModelParams params_from_blob(const nlohmann::json& header, std::vector<Tensor> blocks);

}  // namespace abn
