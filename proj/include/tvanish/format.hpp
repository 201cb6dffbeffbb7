#pragma once

#include <string>

namespace tvanish {

/// Shortest decimal text that parses back to exactly `value`
/// (at most 17 significant digits). Non-finite values print as
/// "nan", "inf" or "-inf".
std::string format_double(double value);

}  // namespace tvanish
