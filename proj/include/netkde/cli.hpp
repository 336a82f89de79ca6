#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace netkde {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the `netkde` tool. `args` excludes the program name.
/// Output written to "-" goes to `out`; diagnostics go to `err`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace netkde
