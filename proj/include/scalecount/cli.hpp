// Copyright 2026 The scalecount Authors. All Rights Reserved.
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

#ifndef SCALECOUNT_CLI_HPP_
#define SCALECOUNT_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace scalecount {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;  // bad flags, config or arguments
inline constexpr int kExitRuntime = 2;  // I/O failure, non-finite loss

// Runs one subcommand. `args` excludes the program name. Every successful
// parse writes run.json (the resolved configuration) before executing.
int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

}  // namespace scalecount

#endif  // SCALECOUNT_CLI_HPP_
