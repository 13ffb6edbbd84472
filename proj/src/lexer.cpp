// SPDX-License-Identifier: Apache-2.0
#include "zkmap/lexer.hpp"

#include <array>
#include <cctype>

namespace zkmap {

static const std::array<const char*, 22> kKeywords = {
    "contract", "function", "modifier", "event",    "emit",   "require",
    "if",       "else",     "while",    "for",      "return", "returns",
    "uint",     "bool",     "address",  "mapping",  "internal", "external",
    "true",     "false",    "msg",      "_",
};

bool is_keyword_word(const std::string& word) {
    for (const char* k : kKeywords)
        if (word == k)
            return true;
    return false;
}

namespace {

class Lexer {
public:
    Lexer(const std::string& text, uint32_t file) : text_(text), file_(file) {}

    std::vector<Token> run() {
        std::vector<Token> tokens;
        while (true) {
            skip_trivia();
            if (pos_ >= text_.size())
                break;
            tokens.push_back(next_token());
        }
        Token eof;
        eof.kind = TokenKind::Eof;
        eof.span = {static_cast<uint32_t>(text_.size()), 0, file_};
        tokens.push_back(eof);
        return tokens;
    }

private:
    char peek(size_t ahead = 0) const {
        return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
    }

    void skip_trivia() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '/' && peek(1) == '/') {
                while (pos_ < text_.size() && text_[pos_] != '\n')
                    ++pos_;
            } else if (c == '/' && peek(1) == '*') {
                uint32_t open = static_cast<uint32_t>(pos_);
                pos_ += 2;
                while (pos_ < text_.size() && !(text_[pos_] == '*' && peek(1) == '/'))
                    ++pos_;
                if (pos_ >= text_.size())
                    throw CompileError(ErrorCode::UnterminatedComment, {open, 2, file_},
                                       "unterminated block comment");
                pos_ += 2;
            } else {
                break;
            }
        }
    }

    Token make(TokenKind kind, uint32_t start) {
        Token t;
        t.kind = kind;
        t.text = text_.substr(start, pos_ - start);
        t.span = {start, static_cast<uint32_t>(pos_ - start), file_};
        return t;
    }

    Token next_token() {
        uint32_t start = static_cast<uint32_t>(pos_);
        char c = text_[pos_];

        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            Token t = make(TokenKind::Ident, start);
            if (is_keyword_word(t.text))
                t.kind = TokenKind::Keyword;
            return t;
        }

        if (std::isdigit(static_cast<unsigned char>(c))) {
            if (c == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
                pos_ += 2;
                while (pos_ < text_.size() && std::isxdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            } else {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            }
            return make(TokenKind::Number, start);
        }

        if (c == '"') {
            ++pos_;
            while (pos_ < text_.size() && text_[pos_] != '"') {
                if (text_[pos_] == '\\')
                    ++pos_;
                if (pos_ < text_.size())
                    ++pos_;
            }
            if (pos_ >= text_.size())
                throw CompileError(ErrorCode::UnterminatedString, {start, 1, file_},
                                   "unterminated string literal");
            ++pos_; // closing quote
            return make(TokenKind::String, start);
        }

        // multi-char punctuation first
        static const char* two_char[] = {"||", "&&", "==", "!=", "<=", ">=", "<<", ">>", "=>"};
        for (const char* op : two_char) {
            if (c == op[0] && peek(1) == op[1]) {
                pos_ += 2;
                return make(TokenKind::Punct, start);
            }
        }
        static const char single[] = "+-*/%&|^!<>=(){}[],;.";
        for (char s : single) {
            if (c == s) {
                ++pos_;
                return make(TokenKind::Punct, start);
            }
        }
        throw CompileError(ErrorCode::UnknownCharacter, {start, 1, file_},
                           std::string("unknown character '") + c + "'");
    }

    const std::string& text_;
    uint32_t file_;
    size_t pos_ = 0;
};

} // namespace

std::vector<Token> tokenize(const std::string& source_text, uint32_t file_index) {
    return Lexer(source_text, file_index).run();
}

} // namespace zkmap
