#pragma once

#include <functional>
#include <string>

namespace ags::log {

/// Emits a warning to the installed sink (stderr by default).
void warn(const std::string& message);

/// Number of warnings emitted by this process so far.
long warning_count();

/// Replaces the sink; pass nullptr to restore stderr.
void set_sink(std::function<void(const std::string&)> sink);

}  // namespace ags::log
