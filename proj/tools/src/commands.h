// tools/src/commands.h

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

#ifndef PHONEPOOL_TOOLS_COMMANDS_H_
#define PHONEPOOL_TOOLS_COMMANDS_H_

#include <ostream>
#include <string>

#include <CLI11.hpp>

namespace phonepool::cli {

struct Context {
  std::ostream& out;
  std::ostream& err;
};

// Each registers its subcommands; the work runs from the subcommand callback.
void RegisterFeatureCommands(CLI::App& app, Context& ctx);
void RegisterTextCommands(CLI::App& app, Context& ctx);
void RegisterModelCommands(CLI::App& app, Context& ctx);

/// Writes `contents` to `path`, or to ctx.out when path is "-" or empty.
void Emit(Context& ctx, const std::string& path, const std::string& contents);

}  // namespace phonepool::cli

#endif  // PHONEPOOL_TOOLS_COMMANDS_H_
