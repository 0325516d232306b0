#pragma once

#include <string>

#include "nlreg/types.hpp"

namespace nlreg {

// Shortest decimal string that round-trips the double (17 significant
// digits, '.' separator); all emitted CSV numbers go through this.
std::string fmt_double(Scalar v);

}  // namespace nlreg
