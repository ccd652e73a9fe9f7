#pragma once

// Front end of the nc-retract binary. Output goes to the given streams so the
// test suite can drive it in-process.

#include <iosfwd>
#include <string>
#include <vector>

namespace ncr::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kUsage = 2,
  kIo = 3,
  kModel = 4,  // parse, schema or model consistency
  kDomain = 5, // point, level or flow outside its admissible range
};

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ncr::cli
