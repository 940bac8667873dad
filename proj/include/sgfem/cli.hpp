#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sgfem::cli {

inline constexpr int kExitTolerance = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCap = 2;
inline constexpr int kExitUsage = 64;

/// Values for a sweep axis: "a..b" (step 0.1), "a..b:step" or "x,y,z".
std::vector<double> parse_range(const std::string& text);

/// Entry point of the `sgfem` executable.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace sgfem::cli
