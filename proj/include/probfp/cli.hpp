#pragma once

#include <iosfwd>
#include <string>

namespace probfp {

// Entry point shared by the executable and the tests. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// problem text for the length-L dot product of uniform(0,1) vectors
[[nodiscard]] std::string gen_dot(unsigned length);

}  // namespace probfp
