#pragma once

namespace smartpower {

/** Full command-line driver. Exit codes: 0 success, 2 bad configuration,
 *  3 numerical failure, 4 target not achieved. */
int run_cli(int argc, const char* const* argv);

}  // namespace smartpower
