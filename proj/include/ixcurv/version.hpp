#pragma once

namespace ixcurv {

inline constexpr const char* kVersion = "0.1.0";

// Identifier of the counter-based generator; recorded in every report so a
// run can be reproduced from (seed, config) alone.
inline constexpr const char* kRngId = "philox4x32-10";

}  // namespace ixcurv
