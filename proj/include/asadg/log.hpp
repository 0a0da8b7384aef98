#pragma once

#include <string_view>

namespace asadg::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

void set_level(Level level) noexcept;
Level level() noexcept;

/// Writes "[asadg <level>] message" to standard error when enabled.
void write(Level level, std::string_view message);

inline void info(std::string_view m) { write(Level::info, m); }
inline void warn(std::string_view m) { write(Level::warn, m); }

}  // namespace asadg::log
