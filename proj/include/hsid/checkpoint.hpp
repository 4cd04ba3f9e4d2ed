#pragma once

#include <filesystem>
#include <optional>

#include "hsid/model.hpp"
#include "hsid/trainer.hpp"

namespace hsid {

// HSCK v1, all integers little-endian u32 unless noted:
//   "HSCK" | version
//   K | branch_channels | n_scales | scales... | trunk_depth | trunk_channels
//     | n_taps | taps... | head_kernel | flags (bit 0: branch ReLU)
//   n_tensors, then per tensor: name_len | name bytes | rank | dims... | float32 payload
//   has_optimizer (0/1); if 1: u64 step | n_tensors | tensors named
//     "adam.m.<param>" then "adam.v.<param>" in parameter order
// Parameters are stored as float32 whatever the in-memory precision.

struct Checkpoint {
  ArchitectureSpec spec;
  ModelParams<float> params;
  std::optional<AdamState<float>> optimizer;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ArchitectureSpec& spec, const ModelParams<T>& params,
                     const AdamState<T>* optimizer = nullptr);

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// As load_checkpoint, but throws ShapeMismatch unless the stored
/// architecture equals `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const ArchitectureSpec& expected);

}  // namespace hsid
