// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>

namespace otfs {

/// Raised when an operation would exceed a configured size cap (dense
/// effective matrices, exhaustive detection).
struct resource_limit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace otfs
