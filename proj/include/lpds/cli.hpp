#pragma once

namespace lpds::cli {

/// Entry point of the lp-sharpen tool. Returns 0 on success, 2 on usage
/// errors and 1 on runtime errors; diagnostics go to stderr.
int run(int argc, char** argv);

}  // namespace lpds::cli
