#pragma once

#include <stdexcept>
#include <string>

namespace bifurc {

/// Error raised by any module. The code is module-qualified, e.g.
/// "groundstate.ShootingBracketFailure", so callers (and the CLI) can report
/// where a run stopped without parsing the message.
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string kind, const std::string& message);

    const std::string& module() const noexcept { return module_; }
    const std::string& kind() const noexcept { return kind_; }
    std::string code() const { return module_ + "." + kind_; }

private:
    std::string module_;
    std::string kind_;
};

}  // namespace bifurc
