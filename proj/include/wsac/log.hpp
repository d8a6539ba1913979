#pragma once

#include <ostream>

namespace wsac::log {

enum class Level { kError = 0, kInfo = 1, kDebug = 2 };

/// Level from WSAC_LOG={error|info|debug}; defaults to error.
Level level();
void set_level(Level lvl);

/// Streams that write to stderr when the level is enabled and discard otherwise.
std::ostream& error();
std::ostream& info();
std::ostream& debug();

}  // namespace wsac::log
