#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace brw::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitResource = 3;

/// Runs one command line (without the program name). Artifacts go to --out;
/// failures print a one-line JSON diagnostic to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace brw::cli
