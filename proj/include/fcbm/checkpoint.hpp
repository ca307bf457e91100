/*
 * Copyright 2026 The fcbm Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FCBM_CHECKPOINT_HPP_
#define FCBM_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "fcbm/model.hpp"

namespace fcbm {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;
inline constexpr char kToolVersion[] = "0.1.0";

// Container layout:
//   8 bytes   magic "FCBMCKPT"
//   8 bytes   header length H, little-endian u64
//   H bytes   JSON header: format_version, names, shapes, head kind, grid,
//             seed, config fingerprint, config, and the ordered array table
//   payload   little-endian IEEE-754 doubles, arrays in header order
void save_checkpoint(const CbmModel& model, const std::filesystem::path& path);
CbmModel load_checkpoint(const std::filesystem::path& path);

// Serialized bytes, as written by save_checkpoint.
std::string serialize_checkpoint(const CbmModel& model);
CbmModel deserialize_checkpoint(const std::string& bytes);

// Hash over every trainable parameter of the bottleneck.
std::uint64_t bottleneck_hash(const BottleneckLayer& layer);

}  // namespace fcbm

#endif  // FCBM_CHECKPOINT_HPP_
