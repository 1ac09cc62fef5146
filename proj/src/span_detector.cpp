#include "numcolor/span_detector.hpp"

#include <string>

#include "numcolor/detail/utf8.hpp"
#include "numcolor/error.hpp"

namespace numcolor {

namespace {

using detail::is_hex_digit;
using detail::Utf8Text;

bool is_blank(char32_t c) { return c == U' ' || c == U'\t'; }
bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }
char32_t lower(char32_t c) { return (c >= U'A' && c <= U'Z') ? c + 32 : c; }

// Length in scalars of an rgb(...) literal starting at i, or 0.
std::size_t match_rgb(const Utf8Text& t, std::size_t i) {
    const std::size_t n = t.size();
    if (i + 4 > n || lower(t[i].cp) != U'r' || lower(t[i + 1].cp) != U'g' ||
        lower(t[i + 2].cp) != U'b' || t[i + 3].cp != U'(') {
        return 0;
    }
    std::size_t p = i + 4;
    for (int comp = 0; comp < 3; ++comp) {
        while (p < n && is_blank(t[p].cp)) ++p;
        const std::size_t digits_start = p;
        while (p < n && is_digit(t[p].cp) && p - digits_start < 3) ++p;
        if (p == digits_start) return 0;
        while (p < n && is_blank(t[p].cp)) ++p;
        const char32_t expected = comp < 2 ? U',' : U')';
        if (p >= n || t[p].cp != expected) return 0;
        ++p;
    }
    return p - i;
}

std::size_t match_hex(const Utf8Text& t, std::size_t i) {
    if (t[i].cp != U'#' || i + 7 > t.size()) return 0;
    for (std::size_t j = i + 1; j < i + 7; ++j) {
        if (!is_hex_digit(t[j].cp)) return 0;
    }
    return 7;
}

}  // namespace

char tag_char(Tag t) noexcept {
    switch (t) {
        case Tag::B: return 'B';
        case Tag::I: return 'I';
        case Tag::O: return 'O';
    }
    return '?';
}

Tag tag_from_char(char c) {
    switch (c) {
        case 'B': return Tag::B;
        case 'I': return Tag::I;
        case 'O': return Tag::O;
        default: throw Error(std::string("unknown BIO tag '") + c + "'");
    }
}

bool is_valid_bio(const std::vector<Tag>& tags) noexcept {
    Tag prev = Tag::O;
    for (const Tag t : tags) {
        if (t == Tag::I && prev == Tag::O) return false;
        prev = t;
    }
    return true;
}

std::vector<ColorSpan> find_color_spans(std::string_view text) {
    const Utf8Text t(text);
    std::vector<ColorSpan> out;
    std::size_t i = 0;
    while (i < t.size()) {
        std::size_t len = match_hex(t, i);
        if (len == 0) len = match_rgb(t, i);
        if (len == 0) {
            ++i;
            continue;
        }
        const bool guarded = (i > 0 && is_hex_digit(t[i - 1].cp)) ||
                             (i + len < t.size() && is_hex_digit(t[i + len].cp));
        const auto parsed = guarded ? std::nullopt : parse_color(t.bytes_of(i, i + len));
        if (!parsed) {
            ++i;
            continue;
        }
        out.push_back({i, i + len, parsed->rgb, parsed->format, srgb_to_lab(parsed->rgb)});
        i += len;
    }
    return out;
}

BioTagging spans_to_bio(const std::vector<Token>& tokens, const std::vector<ColorSpan>& spans) {
    for (std::size_t s = 0; s < spans.size(); ++s) {
        if (spans[s].start >= spans[s].end) throw Error("spans_to_bio: empty span");
        if (s > 0 && spans[s].start < spans[s - 1].end) {
            throw Error("spans_to_bio: overlapping or unordered spans");
        }
    }
    BioTagging out;
    out.tags.assign(tokens.size(), Tag::O);
    std::size_t first_token = 0;
    for (const auto& span : spans) {
        bool first = true;
        for (std::size_t k = first_token; k < tokens.size(); ++k) {
            const Token& tok = tokens[k];
            if (tok.end <= span.start) {
                first_token = k + 1;
                continue;
            }
            if (tok.start >= span.end) break;
            if (tok.start < span.start || tok.end > span.end) ++out.boundary_warnings;
            if (first) {
                // a token shared with the previous span keeps its earlier tag
                if (out.tags[k] == Tag::O) out.tags[k] = Tag::B;
                first = false;
            } else {
                out.tags[k] = Tag::I;
            }
        }
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> tag_groups(const std::vector<Tag>& tags) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t i = 0;
    while (i < tags.size()) {
        if (tags[i] != Tag::B) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < tags.size() && tags[j] == Tag::I) ++j;
        out.emplace_back(i, j);
        i = j;
    }
    return out;
}

GroupParse parse_tag_groups(const std::vector<Token>& tokens, const std::vector<Tag>& tags) {
    if (tokens.size() != tags.size()) throw Error("token/tag length mismatch");
    GroupParse out;
    for (const auto& [b, e] : tag_groups(tags)) {
        std::string text;
        for (std::size_t k = b; k < e; ++k) text += tokens[k].surface;
        const auto parsed = parse_color(text);
        if (!parsed) {
            ++out.dropped;
            continue;
        }
        out.spans.push_back({tokens[b].start, tokens[e - 1].end, parsed->rgb, parsed->format,
                             srgb_to_lab(parsed->rgb)});
        out.token_ranges.emplace_back(b, e);
    }
    return out;
}

}  // namespace numcolor
