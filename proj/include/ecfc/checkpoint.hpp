#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "ecfc/trainer.hpp"

namespace ecfc {

// Binary layout, all integers little-endian:
//   "ECFC-CKPT"           9 bytes
//   version               1 byte (kCheckpointVersion)
//   header length         u64
//   header                UTF-8 JSON: config, normalizer, record, tensor manifest
//   tensors               f64 in manifest order
//   crc32                 u32 over everything between the version byte and the crc
inline constexpr std::uint8_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const char> bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::uint32_t crc32_of(std::span<const char> bytes);

}  // namespace ecfc
