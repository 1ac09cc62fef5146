#include "numcolor/detail/utf8.hpp"

#include <stdexcept>

namespace numcolor::detail {

namespace {

// Returns the sequence length of a well-formed UTF-8 scalar starting at
// `pos`, or 0 when the bytes there are malformed.
std::size_t decode_one(std::string_view s, std::size_t pos, char32_t& out) {
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    const unsigned char b0 = byte(pos);
    if (b0 < 0x80) {
        out = b0;
        return 1;
    }
    std::size_t len = 0;
    char32_t cp = 0;
    char32_t min_cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
        min_cp = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
        min_cp = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
        min_cp = 0x10000;
    } else {
        return 0;
    }
    if (pos + len > s.size()) return 0;
    for (std::size_t i = 1; i < len; ++i) {
        const unsigned char b = byte(pos + i);
        if ((b & 0xC0) != 0x80) return 0;
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
    out = cp;
    return len;
}

}  // namespace

Utf8Text::Utf8Text(std::string_view text) : source_(text) {
    scalars_.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        char32_t cp = 0;
        const std::size_t len = decode_one(text, pos, cp);
        if (len == 0) {
            scalars_.push_back({static_cast<unsigned char>(text[pos]), pos, false});
            ++pos;
        } else {
            scalars_.push_back({cp, pos, true});
            pos += len;
        }
    }
}

std::size_t Utf8Text::byte_at(std::size_t scalar_index) const {
    if (scalar_index > scalars_.size()) throw std::out_of_range("scalar index out of range");
    return scalar_index == scalars_.size() ? source_.size() : scalars_[scalar_index].byte_offset;
}

std::string_view Utf8Text::bytes_of(std::size_t begin, std::size_t end) const {
    const std::size_t b = byte_at(begin);
    const std::size_t e = byte_at(end);
    return source_.substr(b, e - b);
}

std::string encode_utf8(char32_t cp) {
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

}  // namespace numcolor::detail
