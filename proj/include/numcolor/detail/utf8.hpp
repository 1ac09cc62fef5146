#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace numcolor::detail {

/// One decoded scalar value and where it starts in the source bytes.
/// Bytes that do not form valid UTF-8 decode one byte at a time with
/// `valid == false` so that every byte belongs to exactly one scalar.
struct Scalar {
    char32_t cp = 0;
    std::size_t byte_offset = 0;
    bool valid = true;
};

/// Prompt text indexed by scalar value. `bytes_of(i, j)` returns the raw
/// slice covering scalars [i, j).
class Utf8Text {
public:
    explicit Utf8Text(std::string_view text);

    [[nodiscard]] std::size_t size() const noexcept { return scalars_.size(); }
    [[nodiscard]] bool empty() const noexcept { return scalars_.empty(); }
    [[nodiscard]] const Scalar& operator[](std::size_t i) const { return scalars_[i]; }
    [[nodiscard]] std::string_view source() const noexcept { return source_; }

    [[nodiscard]] std::size_t byte_at(std::size_t scalar_index) const;
    [[nodiscard]] std::string_view bytes_of(std::size_t begin, std::size_t end) const;

private:
    std::string_view source_;
    std::vector<Scalar> scalars_;
};

/// Encodes a scalar value; surrogates and out-of-range values become U+FFFD.
std::string encode_utf8(char32_t cp);

[[nodiscard]] inline bool is_ascii_space(char32_t c) noexcept {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v';
}

[[nodiscard]] inline bool is_hex_digit(char32_t c) noexcept {
    return (c >= U'0' && c <= U'9') || (c >= U'a' && c <= U'f') || (c >= U'A' && c <= U'F');
}

}  // namespace numcolor::detail
