#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "numcolor/colorspace.hpp"
#include "numcolor/tokenizers.hpp"

namespace numcolor {

/// A numeric color literal located in a prompt (scalar offsets, half-open).
struct ColorSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    Rgb8 parsed;
    ColorFormat format = ColorFormat::hex;
    LabColor lab;

    friend bool operator==(const ColorSpan&, const ColorSpan&) = default;
};

enum class Tag : unsigned char { B = 0, I = 1, O = 2 };

inline constexpr std::size_t kNumTags = 3;

[[nodiscard]] char tag_char(Tag t) noexcept;
[[nodiscard]] Tag tag_from_char(char c);

/// True when no I follows an O and the sequence does not start with I.
[[nodiscard]] bool is_valid_bio(const std::vector<Tag>& tags) noexcept;

/// A tokenized prompt with one tag per token.
struct TaggedSequence {
    std::string scheme;
    std::string text;
    std::vector<Token> tokens;
    std::vector<Tag> tags;

    friend bool operator==(const TaggedSequence&, const TaggedSequence&) = default;
};

/// Left-to-right maximal-munch scan for `#RRGGBB` and `rgb(r, g, b)`.
/// A candidate touching a hex digit on either side is rejected.
[[nodiscard]] std::vector<ColorSpan> find_color_spans(std::string_view text);

struct BioTagging {
    std::vector<Tag> tags;
    /// Tokens that mix span and non-span characters (tagged in-span anyway).
    std::size_t boundary_warnings = 0;
};

/// Projects character spans onto tokens: the first token touching a span is
/// B, later ones I, everything else O.
[[nodiscard]] BioTagging spans_to_bio(const std::vector<Token>& tokens,
                                      const std::vector<ColorSpan>& spans);

/// Contiguous B I* runs as half-open token index ranges.
[[nodiscard]] std::vector<std::pair<std::size_t, std::size_t>> tag_groups(
    const std::vector<Tag>& tags);

/// Result of turning tag groups back into parsed colors.
struct GroupParse {
    std::vector<ColorSpan> spans;
    std::vector<std::pair<std::size_t, std::size_t>> token_ranges;  ///< parallel to spans
    std::size_t dropped = 0;  ///< groups whose concatenated surfaces did not parse
};

/// Concatenates the surfaces of each B I* group and parses the result.
[[nodiscard]] GroupParse parse_tag_groups(const std::vector<Token>& tokens,
                                          const std::vector<Tag>& tags);

}  // namespace numcolor
