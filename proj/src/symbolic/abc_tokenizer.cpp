#include <cctype>

#include "muse/symbolic/abc.hpp"

namespace muse::abc {

std::string_view to_string(TokenKind kind) {
    switch (kind) {
        case TokenKind::header_field: return "header-field";
        case TokenKind::key: return "key";
        case TokenKind::meter: return "meter";
        case TokenKind::unit_length: return "unit-length";
        case TokenKind::note: return "note";
        case TokenKind::rest: return "rest";
        case TokenKind::chord_open: return "chord-open";
        case TokenKind::chord_close: return "chord-close";
        case TokenKind::barline: return "barline";
        case TokenKind::tuplet: return "tuplet";
        case TokenKind::tie: return "tie";
        case TokenKind::broken_rhythm: return "broken-rhythm";
        case TokenKind::decoration: return "decoration";
        case TokenKind::inline_field: return "inline-field";
        case TokenKind::end_of_input: return "end-of-input";
    }
    return "unknown";
}

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }
bool is_note_letter(char c) { return (c >= 'A' && c <= 'G') || (c >= 'a' && c <= 'g'); }
bool is_rest_letter(char c) { return c == 'z' || c == 'x' || c == 'Z' || c == 'X'; }

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

TokenKind field_kind(char letter) {
    switch (letter) {
        case 'K': return TokenKind::key;
        case 'M': return TokenKind::meter;
        case 'L': return TokenKind::unit_length;
        default: return TokenKind::header_field;
    }
}

class Tokenizer {
public:
    explicit Tokenizer(std::string_view text) : text_(text) {}

    std::vector<Token> run() {
        size_t pos = 0;
        while (pos < text_.size()) {
            size_t end = text_.find('\n', pos);
            const bool has_newline = end != std::string_view::npos;
            if (!has_newline) end = text_.size();
            handle_line(pos, end);
            if (has_newline) pending_ += '\n';
            pos = has_newline ? end + 1 : end;
            ++line_;
        }
        Token eoi;
        eoi.kind = TokenKind::end_of_input;
        eoi.leading = std::move(pending_);
        eoi.offset = text_.size();
        eoi.line = line_;
        tokens_.push_back(std::move(eoi));
        return std::move(tokens_);
    }

private:
    void emit(TokenKind kind, size_t begin, size_t end) {
        Token t;
        t.kind = kind;
        t.lexeme = std::string(text_.substr(begin, end - begin));
        t.leading = std::move(pending_);
        pending_.clear();
        t.offset = begin;
        t.line = line_;
        tokens_.push_back(std::move(t));
    }

    [[noreturn]] void fail(ErrorCode code, const std::string& what) const {
        throw Error(code, "line " + std::to_string(line_) + ": " + what);
    }

    void handle_line(size_t begin, size_t end) {
        const std::string_view content = text_.substr(begin, end - begin);
        const std::string stripped = trim(content);
        if (stripped.empty() || content[0] == '%') {
            pending_ += content;
            return;
        }
        const bool field_line =
            content.size() >= 2 && content[1] == ':' && (is_alpha(content[0]) || content[0] == '+');
        if (field_line) {
            handle_field_line(begin, end);
            return;
        }
        if (in_header_)
            fail(ErrorCode::MalformedHeader, "header line without field colon: '" + stripped + "'");
        scan_music(begin, end);
    }

    void handle_field_line(size_t begin, size_t end) {
        // The lexeme stops at an unescaped '%' and excludes trailing blanks.
        size_t stop = begin;
        while (stop < end) {
            if (text_[stop] == '%' && (stop == begin || text_[stop - 1] != '\\')) break;
            ++stop;
        }
        size_t lex_end = stop;
        while (lex_end > begin + 2 && std::isspace(static_cast<unsigned char>(text_[lex_end - 1]))) --lex_end;
        const char letter = text_[begin];
        emit(field_kind(letter), begin, lex_end);
        tokens_.back().field = letter;
        tokens_.back().value = trim(text_.substr(begin + 2, lex_end - begin - 2));
        pending_ += text_.substr(lex_end, end - lex_end);
        if (letter == 'X') in_header_ = true;
        if (letter == 'K') in_header_ = false;
    }

    size_t scan_length(size_t i, size_t end) const {
        while (i < end && is_digit(text_[i])) ++i;
        while (i < end && text_[i] == '/') {
            ++i;
            while (i < end && is_digit(text_[i])) ++i;
        }
        return i;
    }

    // Returns the end of a note lexeme starting at i, or i when none.
    size_t scan_note(size_t i, size_t end) const {
        size_t j = i;
        while (j < end && (text_[j] == '^' || text_[j] == '_' || text_[j] == '=')) ++j;
        if (j - i > 2 || j >= end || !is_note_letter(text_[j])) return i;
        ++j;
        while (j < end && (text_[j] == ',' || text_[j] == '\'')) ++j;
        return scan_length(j, end);
    }

    // Finds the closing delimiter on the current line, or npos.
    size_t find_close(size_t from, size_t end, char close) const {
        for (size_t k = from; k < end; ++k)
            if (text_[k] == close) return k;
        return std::string_view::npos;
    }

    void scan_music(size_t begin, size_t end) {
        size_t i = begin;
        bool in_chord = false;
        while (i < end) {
            const char c = text_[i];
            const char next = i + 1 < end ? text_[i + 1] : '\0';

            if (is_space(c) || c == '`') {
                pending_ += c;
                ++i;
                continue;
            }
            if (c == '%') {
                pending_ += text_.substr(i, end - i);
                i = end;
                continue;
            }
            if (c == '\\') {  // line continuation
                pending_ += c;
                ++i;
                continue;
            }

            if (in_chord) {
                if (c == ']') {
                    const size_t j = scan_length(i + 1, end);
                    emit(TokenKind::chord_close, i, j);
                    in_chord = false;
                    i = j;
                    continue;
                }
                if (c == '[') fail(ErrorCode::UnbalancedChord, "nested chord");
            }

            if (const size_t j = scan_note(i, end); j != i) {
                emit(TokenKind::note, i, j);
                i = j;
                continue;
            }
            if (is_rest_letter(c)) {
                const size_t j = scan_length(i + 1, end);
                emit(TokenKind::rest, i, j);
                i = j;
                continue;
            }
            if (c == '-') {
                emit(TokenKind::tie, i, i + 1);
                ++i;
                continue;
            }

            if (!in_chord && c == '[') {
                if (next == '|') {
                    size_t j = i + 1;
                    while (j < end && (text_[j] == '|' || text_[j] == ':')) ++j;
                    if (j < end && text_[j] == ']') ++j;
                    emit(TokenKind::barline, i, j);
                    i = j;
                    continue;
                }
                if (is_digit(next)) {
                    size_t j = i + 1;
                    while (j < end && (is_digit(text_[j]) || text_[j] == ',' || text_[j] == '-')) ++j;
                    emit(TokenKind::barline, i, j);
                    i = j;
                    continue;
                }
                if (is_alpha(next) && i + 2 < end && text_[i + 2] == ':') {
                    const size_t close = find_close(i, end, ']');
                    if (close == std::string_view::npos) fail(ErrorCode::UnbalancedChord, "unterminated inline field");
                    emit(TokenKind::inline_field, i, close + 1);
                    tokens_.back().field = next;
                    tokens_.back().value = trim(text_.substr(i + 3, close - i - 3));
                    i = close + 1;
                    continue;
                }
                emit(TokenKind::chord_open, i, i + 1);
                in_chord = true;
                ++i;
                continue;
            }

            if (c == '|' || (c == ':' && (next == '|' || next == ':'))) {
                size_t j = i;
                while (j < end && (text_[j] == '|' || text_[j] == ':')) ++j;
                if (j < end && text_[j] == ']') ++j;
                if (text_[j - 1] == '|' && j < end && is_digit(text_[j])) {
                    while (j < end && (is_digit(text_[j]) || text_[j] == ',' || text_[j] == '-')) ++j;
                }
                emit(TokenKind::barline, i, j);
                i = j;
                continue;
            }
            if (c == ']') fail(ErrorCode::UnbalancedChord, "chord close without open");

            if (c == '>' || c == '<') {
                size_t j = i;
                while (j < end && text_[j] == c) ++j;
                emit(TokenKind::broken_rhythm, i, j);
                i = j;
                continue;
            }
            if (c == '(' && is_digit(next)) {
                size_t j = i + 1;
                while (j < end && is_digit(text_[j])) ++j;
                for (int group = 0; group < 2 && j < end && text_[j] == ':'; ++group) {
                    ++j;
                    while (j < end && is_digit(text_[j])) ++j;
                }
                emit(TokenKind::tuplet, i, j);
                i = j;
                continue;
            }
            if (c == '!' || c == '+' || c == '"' || c == '{') {
                const char close = c == '{' ? '}' : c;
                const size_t k = find_close(i + 1, end, close);
                // An unterminated !, + or " is kept as a single-character decoration.
                const size_t j = k == std::string_view::npos ? (c == '"' || c == '{' ? end : i + 1) : k + 1;
                emit(TokenKind::decoration, i, j);
                i = j;
                continue;
            }
            // Slurs, dots, rolls, single-letter decorations and anything unknown.
            emit(TokenKind::decoration, i, i + 1);
            ++i;
        }
        if (in_chord) fail(ErrorCode::UnbalancedChord, "chord not closed before end of line");
    }

    std::string_view text_;
    std::vector<Token> tokens_;
    std::string pending_;
    size_t line_ = 1;
    bool in_header_ = false;
};

}  // namespace

std::vector<Token> tokenize(std::string_view text) { return Tokenizer(text).run(); }

std::string detokenize(const std::vector<Token>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        out += t.leading;
        out += t.lexeme;
    }
    return out;
}

}  // namespace muse::abc
