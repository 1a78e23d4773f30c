#pragma once

namespace semcom::cli {

// Entry point for the semcom command-line tool. Returns a process exit code:
// 0 on success, 1 on runtime failure, 2 on usage errors.
int run(int argc, char** argv);

}  // namespace semcom::cli
