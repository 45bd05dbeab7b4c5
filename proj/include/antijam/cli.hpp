#pragma once

namespace antijam::cli {

/// Exit codes: 0 success, 2 usage or configuration error, 3 data error.
int run(int argc, char** argv);

}  // namespace antijam::cli
