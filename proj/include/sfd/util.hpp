// include/sfd/util.hpp

// Copyright 2026  The sfd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SFD_UTIL_HPP_
#define SFD_UTIL_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace sfd {

using json = nlohmann::json;

// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view data,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

// One step of the splitmix64 mixer.
std::uint64_t splitmix64(std::uint64_t x);

// Lowercase hex SHA-256 of data (64 characters).
std::string sha256_hex(std::string_view data);

// Reads a JSON-lines file. Blank lines are skipped; `fn` receives the parsed
// object and its 1-based line number. Parse failures throw ParseError naming
// the line.
void read_jsonl(const std::filesystem::path& path,
                const std::function<void(const json&, std::size_t)>& fn);

// Writes one compact JSON object per line, replacing the file atomically.
void write_jsonl(const std::filesystem::path& path,
                 const std::vector<json>& records);

// Appends one line to a JSON-lines file.
void append_jsonl(const std::filesystem::path& path, const json& record);

// Atomic whole-file write via a sibling temporary and rename.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

std::string read_file(const std::filesystem::path& path);

// Runs fn(i) for i in [0, n) on at most `parallelism` threads. Exceptions
// from fn are captured and the first one rethrown after all workers join.
void parallel_for(std::size_t n, int parallelism,
                  const std::function<void(std::size_t)>& fn);

}  // namespace sfd

#endif  // SFD_UTIL_HPP_
