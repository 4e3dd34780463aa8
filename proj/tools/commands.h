// Copyright 2026 The fairprep Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// The fairprep command line: verbs, flags and exit codes. Kept out of
// main() so tests can drive it in-process.

#ifndef FAIRPREP_TOOLS_COMMANDS_H_
#define FAIRPREP_TOOLS_COMMANDS_H_

#include <ostream>
#include <string>
#include <vector>

namespace fairprep::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInfeasible = 2,  // also iteration limit and numerical breakdown
  kExitConfig = 3,
  kExitIo = 4,  // unreadable files, bad data, provenance mismatches
};

// `args` excludes the program name.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace fairprep::cli

#endif  // FAIRPREP_TOOLS_COMMANDS_H_
