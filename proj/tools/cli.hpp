// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace latentlstm::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kEmptyResult = 2,
  kNumericalAbort = 3,
};

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace latentlstm::cli
