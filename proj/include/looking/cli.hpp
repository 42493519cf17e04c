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

#ifndef LOOKING__CLI_HPP_
#define LOOKING__CLI_HPP_

namespace looking
{

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the `looking` tool. Subcommands: convert, synth, train,
/// eval, predict, saliency, serve. Returns 0 on success, 1 on invalid input
/// or flags, 2 on runtime failures.
int run_cli(int argc, const char * const * argv);

}  // namespace looking

#endif  // LOOKING__CLI_HPP_
