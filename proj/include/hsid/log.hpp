#pragma once

#include <functional>
#include <string_view>

namespace hsid {

using WarningHandler = std::function<void(std::string_view)>;

// Installs a sink for non-fatal diagnostics and returns the previous one.
// The default sink writes "warning: <msg>" lines to stderr.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

}  // namespace hsid
