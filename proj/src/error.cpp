// SPDX-License-Identifier: Apache-2.0
#include "error.hpp"

namespace bg {

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace bg
