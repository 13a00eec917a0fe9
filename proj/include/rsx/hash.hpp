// Copyright 2026 The rsx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RSX_HASH_HPP_
#define RSX_HASH_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rsx {

// Lowercase hex SHA-1 of `data`.
std::string sha1_hex(std::string_view data);

// Git blob id: SHA-1 over "blob <size>\0" followed by the content.
std::string git_blob_hash(std::string_view content);
std::string git_blob_hash_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// float32 little-endian byte blobs.
std::string pack_f32_le(std::span<const float> values);
std::vector<float> unpack_f32_le(std::string_view bytes);

}  // namespace rsx

#endif  // RSX_HASH_HPP_
