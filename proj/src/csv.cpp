#include "nlreg/csv.hpp"

#include <cstdio>

namespace nlreg {

std::string fmt_double(Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace nlreg
