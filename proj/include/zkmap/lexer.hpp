// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/diag.hpp"
#include "zkmap/span.hpp"

#include <string>
#include <vector>

namespace zkmap {

enum class TokenKind : uint8_t {
    Keyword,
    Ident,
    Number,
    Punct,
    String,
    Eof,
};

struct Token {
    TokenKind kind = TokenKind::Eof;
    std::string text;
    SourceSpan span;

    bool is(TokenKind k, const char* t) const { return kind == k && text == t; }
    bool is_keyword(const char* t) const { return is(TokenKind::Keyword, t); }
    bool is_punct(const char* t) const { return is(TokenKind::Punct, t); }
};

/// Lex `source_text` into tokens. Whitespace and `//` / `/* */` comments are
/// skipped but counted in offsets. The returned stream ends with an Eof token
/// whose span is the zero-width position past the last byte.
std::vector<Token> tokenize(const std::string& source_text, uint32_t file_index);

bool is_keyword_word(const std::string& word);

} // namespace zkmap
