#include "flowlin/errors.hpp"

namespace flowlin {

const char* to_string(Err code) {
    switch (code) {
        case Err::kInvalidArgument: return "InvalidArgument";
        case Err::kSingularSystem: return "SingularSystem";
        case Err::kNotHurwitz: return "NotHurwitz";
        case Err::kSyntaxError: return "SyntaxError";
        case Err::kUnknownIdentifier: return "UnknownIdentifier";
        case Err::kArityError: return "ArityError";
        case Err::kEvalDomainError: return "EvalDomainError";
        case Err::kStepLimitExceeded: return "StepLimitExceeded";
        case Err::kStepSizeUnderflow: return "StepSizeUnderflow";
        case Err::kNoCrossing: return "NoCrossing";
        case Err::kAtEquilibrium: return "AtEquilibrium";
        case Err::kValidationFailed: return "ValidationFailed";
        case Err::kDegenerateLevel: return "DegenerateLevel";
        case Err::kNotOnLevelSet: return "NotOnLevelSet";
        case Err::kNoRayCrossing: return "NoRayCrossing";
        case Err::kMultipleCrossings: return "MultipleCrossings";
        case Err::kStarShapeFailed: return "StarShapeFailed";
        case Err::kTimeCapExceeded: return "TimeCapExceeded";
        case Err::kOutOfDomain: return "OutOfDomain";
        case Err::kGradientVanishes: return "GradientVanishes";
        case Err::kUnknownSystem: return "UnknownSystem";
        case Err::kIoError: return "IoError";
    }
    return "UnknownError";
}

int exit_code(Err code) {
    switch (code) {
        case Err::kValidationFailed:
        case Err::kNotHurwitz:
        case Err::kStarShapeFailed:
        case Err::kDegenerateLevel:
            return 2;
        case Err::kSyntaxError:
        case Err::kUnknownIdentifier:
        case Err::kArityError:
        case Err::kUnknownSystem:
        case Err::kInvalidArgument:
            return 4;
        default:
            return 3;
    }
}

}  // namespace flowlin
