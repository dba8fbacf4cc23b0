#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsym/modelfile.hpp"
#include "nsym/zero.hpp"

namespace nsym::cli {

struct RunOptions {
    std::string command; // derive | verify | integral | simulate
    std::optional<int> order;
    std::optional<Rational> fixed_lapse;
    std::uint64_t seed = kDefaultProbeSeed;
    std::optional<std::string> candidate; // restrict to one candidate
    bool dump_truncated = false;
};

struct RunResult {
    int exit_code = 0; // 0 pass, 1 verification failure, 2 usage error
    std::string human_text;
    std::string machine_json;
    std::vector<std::pair<std::string, std::string>> artifacts; // filename -> content
};

/// Dispatch one command against a parsed document. Usage problems raise
/// (ParseError/UsageError); the CLI maps those to exit status 2.
RunResult run_command(const ModelDocument& doc, const RunOptions& opts);

} // namespace nsym::cli
