#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tdvae/vae.hpp"

namespace tdvae {

// Checkpoint layout (all integers and floats little-endian):
//   "TDVAE1"
//   u8  latent mode (0 torus, 1 euclidean)
//   u32 latent size (circles or dimensions)
//   u32 input dimension
//   for encoder, then decoder:
//     u32 layer count
//     per layer: u32 in, u32 out, u8 activation
//   f64 parameter blocks in layer order: encoder W0, b0, W1, b1, ..., then decoder.

std::vector<std::uint8_t> serialize_model(const VaeModel& model);
VaeModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const VaeModel& model);
VaeModel load_checkpoint(const std::filesystem::path& path);

} // namespace tdvae
