#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace rcm::cli {

// Seed used when neither --seed nor RCM_SEED is given.
inline constexpr std::uint64_t kDefaultSeed = 5489;

// Version of every JSON document the tool writes.
inline constexpr int kFormatVersion = 1;

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,  // bad arguments and IoError
  kDomain = 3,
  kNotPositiveDefinite = 4,
  kDimensionMismatch = 5,
  kParse = 6,
  kSchema = 7,
  kMissingValue = 8,
};

// Runs the tool on args (without the program name). Primary output goes to
// `out` unless --out names a file; diagnostics go to `err` as
// "rcm: <Category>: <message>".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rcm::cli
