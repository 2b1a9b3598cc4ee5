#pragma once

#include <stdexcept>
#include <string>

namespace flowlin {

/// Every failure mode the engine can report, across all components.
enum class Err {
    kInvalidArgument,
    kSingularSystem,
    kNotHurwitz,
    kSyntaxError,
    kUnknownIdentifier,
    kArityError,
    kEvalDomainError,
    kStepLimitExceeded,
    kStepSizeUnderflow,
    kNoCrossing,
    kAtEquilibrium,
    kValidationFailed,
    kDegenerateLevel,
    kNotOnLevelSet,
    kNoRayCrossing,
    kMultipleCrossings,
    kStarShapeFailed,
    kTimeCapExceeded,
    kOutOfDomain,
    kGradientVanishes,
    kUnknownSystem,
    kIoError,
};

const char* to_string(Err code);

/// CLI exit-code contract: 0 ok, 1 tolerance breach, 2 validation failure,
/// 3 construction/evaluation failure, 4 usage error.
int exit_code(Err code);

class EngineError : public std::runtime_error {
  public:
    EngineError(Err code, std::string module, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + " [" + module + "]: " + detail),
          code_(code),
          module_(std::move(module)),
          detail_(detail) {}

    [[nodiscard]] Err code() const noexcept { return code_; }
    [[nodiscard]] const std::string& module() const noexcept { return module_; }
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

  private:
    Err code_;
    std::string module_;
    std::string detail_;
};

}  // namespace flowlin
