// Copyright 2026 The Looking Authors
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

#ifndef LOOKING__FILEUTIL_HPP_
#define LOOKING__FILEUTIL_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace looking
{

/// Write to a sibling temp file, flush, then rename over the target so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path & path, std::string_view contents);

/// Whole file as a string; throws std::runtime_error when unreadable.
std::string read_file(const std::filesystem::path & path);

}  // namespace looking

#endif  // LOOKING__FILEUTIL_HPP_
