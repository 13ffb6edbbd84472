// SPDX-License-Identifier: Apache-2.0
#include "zkmap/diag.hpp"

namespace zkmap {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnknownCharacter: return "UnknownCharacter";
    case ErrorCode::UnterminatedString: return "UnterminatedString";
    case ErrorCode::UnterminatedComment: return "UnterminatedComment";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownName: return "UnknownName";
    case ErrorCode::AmbiguousOverload: return "AmbiguousOverload";
    case ErrorCode::DuplicateDefinition: return "DuplicateDefinition";
    case ErrorCode::TypeError: return "TypeError";
    case ErrorCode::MissingReturn: return "MissingReturn";
    case ErrorCode::DanglingIrId: return "DanglingIrId";
    case ErrorCode::OffsetOutOfRange: return "OffsetOutOfRange";
    case ErrorCode::TableMismatch: return "TableMismatch";
    case ErrorCode::StepLimit: return "StepLimit";
    case ErrorCode::InvalidJump: return "InvalidJump";
    case ErrorCode::StackUnderflow: return "StackUnderflow";
    case ErrorCode::CoverageGap: return "CoverageGap";
    case ErrorCode::JumpTargetOverflow: return "JumpTargetOverflow";
    case ErrorCode::TruncatedImmediate: return "TruncatedImmediate";
    case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

} // namespace zkmap
