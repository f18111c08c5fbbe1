#ifndef RSPIDER_TOOLS_CLI_HPP
#define RSPIDER_TOOLS_CLI_HPP

#include <iosfwd>

namespace rspider::cli {

/// Entry point of the `rspider` tool. Returns 0 on success, 1 on a usage
/// error and 2 when a run fails.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rspider::cli

#endif  // RSPIDER_TOOLS_CLI_HPP
