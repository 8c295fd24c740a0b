#pragma once

namespace navkit {

// Exit codes: 0 ok, 2 config or usage error, 3 numerical failure.
int run_cli(int argc, char** argv);

}  // namespace navkit
