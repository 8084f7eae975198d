// SPDX-License-Identifier: Apache-2.0
#pragma once

#ifndef CROPDRQN_VERSION
#define CROPDRQN_VERSION "0.1.0"
#endif

namespace cropdrqn {
inline constexpr const char* kVersion = CROPDRQN_VERSION;
}
