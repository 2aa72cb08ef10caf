#include "abn/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace abn {
namespace {

void put_le(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> bytes;
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes.data(), 8);
}

double get_le(std::istream& in) {
  std::array<unsigned char, 8> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), 8)) throw std::runtime_error("checkpoint: truncated data");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_blob(std::ostream& out, nlohmann::json header, const std::vector<const Tensor*>& blocks) {
  auto shapes = nlohmann::json::array();
  for (const auto* t : blocks) shapes.push_back({t->rows(), t->cols()});
  header["shapes"] = shapes;
  out << header.dump() << '\n';
  for (const auto* t : blocks) {
    for (double v : t->values()) put_le(out, v);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

CheckpointBlob read_blob(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("checkpoint: missing header");
  CheckpointBlob blob;
  try {
    blob.header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: bad header: ") + e.what());
  }
  for (const auto& shape : blob.header.at("shapes")) {
    const auto rows = shape.at(0).get<std::size_t>();
    const auto cols = shape.at(1).get<std::size_t>();
    Tensor t(rows, cols);
    for (auto& v : t.values()) v = get_le(in);
    blob.blocks.push_back(std::move(t));
  }
  return blob;
}

nlohmann::json params_header(const ModelParams& params, std::uint64_t seed) {
  nlohmann::json h;
  h["model"] = to_string(kind_of(params));
  h["seed"] = seed;
  if (const auto* d = std::get_if<DagnnParams>(&params)) h["depth"] = d->depth;
  return h;
}

ModelParams params_from_blob(const nlohmann::json& header, std::vector<Tensor> blocks) {
  const auto kind = parse_model_kind(header.at("model").get<std::string>());
  if (kind == ModelKind::Gcn) {
    if (blocks.size() < 2) throw std::runtime_error("checkpoint: gcn needs 2 weight blocks");
    return GcnParams{std::move(blocks[0]), std::move(blocks[1])};
  }
  if (blocks.size() < 3) throw std::runtime_error("checkpoint: dagnn needs 3 weight blocks");
  return DagnnParams{std::move(blocks[0]), std::move(blocks[1]), std::move(blocks[2]),
                     header.at("depth").get<std::size_t>()};
}

void save_params(const std::filesystem::path& path, const ModelParams& params, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_blob(out, params_header(params, seed), trainable(params));
}

ModelParams load_params(const std::filesystem::path& path, std::uint64_t* seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  auto blob = read_blob(in);
  if (seed) *seed = blob.header.at("seed").get<std::uint64_t>();
  return params_from_blob(blob.header, std::move(blob.blocks));
}

}  // namespace abn
