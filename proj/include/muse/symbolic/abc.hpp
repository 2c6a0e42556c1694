#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "muse/common/error.hpp"
#include "muse/symbolic/score.hpp"

namespace muse::abc {

enum class TokenKind {
    header_field,
    key,
    meter,
    unit_length,
    note,
    rest,
    chord_open,
    chord_close,
    barline,
    tuplet,
    tie,
    broken_rhythm,
    decoration,
    inline_field,
    end_of_input,
};

std::string_view to_string(TokenKind kind);

/// One lexical unit of ABC text. `leading` holds the whitespace, comments
/// and line continuations between the previous token and this one, so the
/// token list reproduces its input byte for byte. The stream always ends
/// with an end_of_input token carrying any trailing text.
struct Token {
    TokenKind kind = TokenKind::decoration;
    std::string lexeme;
    std::string leading;
    size_t offset = 0;  // byte offset of the lexeme
    size_t line = 1;
    // Field letter and value for header_field/key/meter/unit_length/inline_field.
    char field = 0;
    std::string value;
};

/// Errors: UnbalancedChord, MalformedHeader.
std::vector<Token> tokenize(std::string_view text);
std::string detokenize(const std::vector<Token>& tokens);

struct ParseOptions {
    PitchRange range;
    bool check_range = true;
};

/// Parses the first tune of an ABC document.
/// Errors: MissingKeyHeader, MeasureOverflow, PitchOutOfRange, plus
/// tokenizer errors. Uppercase C is middle C (MIDI 60).
Score parse(std::string_view text, const ParseOptions& options = {});

/// Writes a score as a single ABC tune. The unit length is the largest unit
/// fraction dividing every duration. Errors: UnrepresentableDuration.
std::string serialize(const Score& score);

struct MeasureFragment {
    std::string abc;
    TimeSignature time;
};

/// One standalone fragment per measure (inline K:/L: fields, voice
/// switches and repeat marks included).
std::vector<MeasureFragment> split_measures(const Score& score);

/// Rebuilds a score from per-measure fragments, each parsed under its own
/// time signature. Errors: FragmentParseError naming the fragment index.
Score concat_measures(const std::vector<MeasureFragment>& fragments);

}  // namespace muse::abc
