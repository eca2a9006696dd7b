//
// Copyright 2026 The adsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef ADSIM_CLI_H_
#define ADSIM_CLI_H_

#include <ostream>

namespace adsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

inline constexpr char kToolVersion[] = "0.1.0";

// adsim <subcommand> --scenario PATH [--seed N] [--out DIR] [--noise-off]
//       [--replications K] [--report PATH] [--threads T]
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace adsim

#endif  // ADSIM_CLI_H_
