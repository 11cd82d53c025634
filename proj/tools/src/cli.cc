// tools/src/cli.cc

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

#include "phonepool/cli.h"

#include <memory>

#include "commands.h"
#include "phonepool/corpusio.h"
#include "phonepool/error.h"

namespace phonepool::cli {

void Emit(Context& ctx, const std::string& path, const std::string& contents) {
  if (path.empty() || path == "-") {
    ctx.out << contents;
    return;
  }
  WriteTextFile(path, contents);
}

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{out, err};
  CLI::App app("phonepool: phoneme-informed pooling of speech features and a desk-scale "
               "speech-to-text model",
               "phonepool");
  app.set_config("--config", "", "Configuration file (TOML/INI, one section per subcommand)");
  app.require_subcommand(1);
  app.fallthrough(false);
  RegisterFeatureCommands(app, ctx);
  RegisterTextCommands(app, ctx);
  RegisterModelCommands(app, ctx);

  if (!args.empty() && !args[0].empty() && args[0][0] != '-') {
    try {
      (void)app.get_subcommand(args[0]);
    } catch (const CLI::OptionNotFound&) {
      err << "phonepool: unknown subcommand '" << args[0] << "'\n";
      return kExitValidation;
    }
  }

  std::vector<const char*> argv{"phonepool"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  } catch (const IoError& e) {
    err << "phonepool: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "phonepool: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace phonepool::cli
