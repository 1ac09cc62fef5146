#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace numcolor {

struct Rgb8 {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

/// A point in CIE Lab (D65, 2 degree observer).
struct LabColor {
    double L = 0.0;
    double a = 0.0;
    double b = 0.0;

    friend bool operator==(const LabColor&, const LabColor&) = default;

    [[nodiscard]] bool finite() const noexcept;
    [[nodiscard]] std::array<double, 3> array() const noexcept { return {L, a, b}; }
};

enum class ColorFormat { hex, rgb };

[[nodiscard]] std::string_view to_string(ColorFormat f) noexcept;

struct ParsedColor {
    ColorFormat format = ColorFormat::hex;
    Rgb8 rgb;

    friend bool operator==(const ParsedColor&, const ParsedColor&) = default;
};

/// Recognizes a whole string as `#RRGGBB` (case-insensitive) or
/// `rgb(r, g, b)` with 0..255 components. Anything else, including 3-digit
/// hex and out-of-range components, yields nullopt.
[[nodiscard]] std::optional<ParsedColor> parse_color(std::string_view text) noexcept;

/// Canonical literal for a color: `#RRGGBB` upper-case or `rgb(r, g, b)`.
[[nodiscard]] std::string format_color(const Rgb8& c, ColorFormat f);

[[nodiscard]] LabColor srgb_to_lab(const Rgb8& c) noexcept;
/// Lab of a linear-light sRGB triple (channels may lie outside [0, 1]).
[[nodiscard]] LabColor linear_srgb_to_lab(const std::array<double, 3>& linear) noexcept;

struct SrgbResult {
    std::array<double, 3> linear{};  ///< linear-light sRGB, unclipped
    Rgb8 clipped;                    ///< clamp to [0,1], gamma-encode, round half-to-even
    bool in_gamut = false;
};

/// Gamut tolerance on linear sRGB channels.
inline constexpr double kGamutEpsilon = 1e-9;

[[nodiscard]] SrgbResult lab_to_srgb(const LabColor& c) noexcept;
[[nodiscard]] bool in_srgb_gamut(const LabColor& c) noexcept;

/// CIEDE2000 with kL = kC = kH = 1.
[[nodiscard]] double delta_e_2000(const LabColor& c1, const LabColor& c2) noexcept;

/// Rounds to the nearest integer, ties to even, independent of the FP environment.
[[nodiscard]] double round_half_even(double x) noexcept;

struct NamedColor {
    std::string name;
    LabColor lab;
};

/// Immutable list of named Lab centroids with unique names.
class NamedColorTable {
public:
    NamedColorTable() = default;
    explicit NamedColorTable(std::vector<NamedColor> entries);

    /// Reads `name<TAB>L<TAB>a<TAB>b` lines; `#` starts a comment line.
    static NamedColorTable load(const std::string& path);
    static NamedColorTable parse(std::string_view text);

    [[nodiscard]] const std::vector<NamedColor>& entries() const noexcept { return entries_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

private:
    std::vector<NamedColor> entries_;
};

struct NamedMatch {
    std::string name;
    double delta_e = 0.0;
};

/// Entry minimizing CIEDE2000 to `c`; ties go to the lexicographically smallest name.
[[nodiscard]] NamedMatch nearest_named(const LabColor& c, const NamedColorTable& table);

}  // namespace numcolor
