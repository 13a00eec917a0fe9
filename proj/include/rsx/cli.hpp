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

#ifndef RSX_CLI_HPP_
#define RSX_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace rsx {

// `args` excludes the program name. Data goes to `out`, logs to `err`.
// Failures print one line `error<TAB>kind=<kind><TAB>message=<text>` to
// `err` and return 2 for usage errors, 1 otherwise.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace rsx

#endif  // RSX_CLI_HPP_
