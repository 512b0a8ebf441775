#pragma once

namespace clotkit::cli {

/// Full CLI entry point. Returns the process exit code:
/// 0 success, 1 data error, 2 usage error.
int run(int argc, const char* const* argv);

}  // namespace clotkit::cli
