// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/span.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace zkmap {

enum class ErrorCode {
    // lexer
    UnknownCharacter,
    UnterminatedString,
    UnterminatedComment,
    // parser
    SyntaxError,
    // resolver
    UnknownName,
    AmbiguousOverload,
    DuplicateDefinition,
    // lowering
    TypeError,
    MissingReturn,
    // mapgen
    DanglingIrId,
    OffsetOutOfRange,
    TableMismatch,
    // exec
    StepLimit,
    InvalidJump,
    StackUnderflow,
    CoverageGap,
    // backend
    JumpTargetOverflow,
    TruncatedImmediate,
    Internal,
};

const char* error_code_name(ErrorCode code);

class CompileError : public std::runtime_error {
public:
    CompileError(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code(code) {}
    CompileError(ErrorCode code, SourceSpan span, std::string message)
        : std::runtime_error(std::move(message)), code(code), span(span) {}

    ErrorCode code;
    std::optional<SourceSpan> span;
};

} // namespace zkmap
