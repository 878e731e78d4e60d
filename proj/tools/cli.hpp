#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bigjump {

// Exit codes: 0 success, 1 failure (verify failed or runtime error),
// 2 config or argument error, 3 saturation beyond the configured budget.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bigjump
