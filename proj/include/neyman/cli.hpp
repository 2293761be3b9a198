#pragma once
// The `neyman` command line. Exit codes: 0 success, 1 domain error, 2 usage error.

#include <iosfwd>
#include <string>
#include <vector>

namespace neyman {

// args excludes the program name. NEYMAN_SEED, when set, overrides --seed.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace neyman
