// tools/include/phonepool/cli.h

// Copyright 2026 The phonepool Authors
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

#ifndef PHONEPOOL_CLI_H_
#define PHONEPOOL_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace phonepool::cli {

enum ExitCode { kExitOk = 0, kExitValidation = 1, kExitIo = 2 };

/// Runs the `phonepool` driver. `args` excludes the program name.
/// Returns 0 on success, 1 on validation errors, 2 on I/O errors.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phonepool::cli

#endif  // PHONEPOOL_CLI_H_
