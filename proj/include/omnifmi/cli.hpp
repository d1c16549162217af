#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace omnifmi {

// Command-line entry point. `args` excludes the program name. Returns 0 on
// success, 2 on usage errors (usage text on `err`) and 1 on runtime errors,
// which print a single line `error: code=<code> message=<text>` on `err`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "1.5deg", "0.02rad" or a bare number in radians.
double parse_angle(const std::string& text);

}  // namespace omnifmi
