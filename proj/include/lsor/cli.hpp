#pragma once

#include <ostream>

namespace lsor {

// Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace lsor
