#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "omra/codec.hpp"

namespace omra::cli {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kDivergence = 3 };

// Runs one subcommand; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

// "default" expands to the built-in ladder; other tokens are q_step:lambda.
std::vector<QuantConfig> parse_rates(const std::vector<std::string>& tokens);

}  // namespace omra::cli
