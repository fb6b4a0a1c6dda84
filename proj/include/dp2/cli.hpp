// Copyright 2026 The dp2 Authors.
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

#ifndef DP2_CLI_HPP_
#define DP2_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace dp2 {

// Subcommands: train, sweep, accountant, gen-data, diagnose.
// Exit codes: 0 success, 2 missing config file, 1 any other error.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace dp2

#endif  // DP2_CLI_HPP_
