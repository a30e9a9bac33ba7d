#pragma once

#include <functional>
#include <string_view>

namespace rigscan::log {

enum class Level { Debug = 0, Info = 1, Warning = 2, Error = 3, Off = 4 };

using Sink = std::function<void(Level, std::string_view)>;

// Messages below the threshold are dropped. Default threshold is Info.
void set_level(Level level);
Level level();

// Replaces the stderr sink; pass an empty function to restore it.
void set_sink(Sink sink);

void write(Level level, std::string_view message);

inline void debug(std::string_view m) { write(Level::Debug, m); }
inline void info(std::string_view m) { write(Level::Info, m); }
inline void warn(std::string_view m) { write(Level::Warning, m); }
inline void error(std::string_view m) { write(Level::Error, m); }

}  // namespace rigscan::log
