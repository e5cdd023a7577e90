#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace fisao::log {

using Sink = std::function<void(std::string_view)>;

/// Routes warnings to `sink`; an empty sink restores the stderr default.
/// Returns the previously installed sink.
Sink set_warning_sink(Sink sink);

void warn(std::string_view message);

/// Installs a sink for the lifetime of the object, then restores the old one.
class ScopedWarningSink {
 public:
  explicit ScopedWarningSink(Sink sink) : previous_(set_warning_sink(std::move(sink))) {}
  ~ScopedWarningSink() { set_warning_sink(std::move(previous_)); }
  ScopedWarningSink(const ScopedWarningSink&) = delete;
  ScopedWarningSink& operator=(const ScopedWarningSink&) = delete;

 private:
  Sink previous_;
};

}  // namespace fisao::log
