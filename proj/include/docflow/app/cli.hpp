#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace docflow::app {

inline constexpr const char* kDefaultStoreDir = ".docflow/store";

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the docflow command line tool; args excludes the program
// name. Subcommands: ingest, query, trace, read, versions, scenario, serve.
// Returns 0 on success, 1 on a domain error or aborted job, 2 on bad usage.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace docflow::app
