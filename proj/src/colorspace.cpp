#include "numcolor/colorspace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "numcolor/error.hpp"

namespace numcolor {

namespace {

// Linear sRGB -> XYZ for the D65 white (0.95047, 1, 1.08883), derived from
// the IEC 61966-2-1 primaries, and its exact inverse.
constexpr double kToXyz[3][3] = {
    {0.41245643908969210174, 0.35757607764390896921, 0.18043748326639892905},
    {0.21267285140562248996, 0.71515215528781793842, 0.07217499330655957162},
    {0.019333895582329317269, 0.11919202588130298974, 0.95030407853636769299},
};
constexpr double kFromXyz[3][3] = {
    {3.2404541621141055308, -1.5371385127977167261, -0.49853140955601623551},
    {-0.96926603050518677127, 1.876010845446694056, 0.041556017530349838398},
    {0.055643430959114690756, -0.20402591351675386611, 1.0572251882231791244},
};

constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;

constexpr double kDelta = 6.0 / 29.0;

double lab_f(double t) {
    if (t > kDelta * kDelta * kDelta) return std::cbrt(t);
    return t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double t) {
    if (t > kDelta) return t * t * t;
    return 3.0 * kDelta * kDelta * (t - 4.0 / 29.0);
}

double decode_gamma(double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double encode_gamma(double v) {
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

bool is_blank(char c) { return c == ' ' || c == '\t'; }

std::optional<Rgb8> parse_hex(std::string_view s) {
    if (s.size() != 7 || s[0] != '#') return std::nullopt;
    std::array<int, 6> d{};
    for (std::size_t i = 0; i < 6; ++i) {
        d[i] = hex_value(s[i + 1]);
        if (d[i] < 0) return std::nullopt;
    }
    return Rgb8{static_cast<std::uint8_t>(d[0] * 16 + d[1]),
                static_cast<std::uint8_t>(d[2] * 16 + d[3]),
                static_cast<std::uint8_t>(d[4] * 16 + d[5])};
}

std::optional<Rgb8> parse_rgb(std::string_view s) {
    if (s.size() < 10) return std::nullopt;
    const auto lower = [](char c) { return static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c); };
    if (lower(s[0]) != 'r' || lower(s[1]) != 'g' || lower(s[2]) != 'b' || s[3] != '(') {
        return std::nullopt;
    }
    std::size_t pos = 4;
    std::array<int, 3> v{};
    for (int i = 0; i < 3; ++i) {
        while (pos < s.size() && is_blank(s[pos])) ++pos;
        int value = 0;
        int digits = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (++digits > 3) return std::nullopt;
            value = value * 10 + (s[pos] - '0');
            ++pos;
        }
        if (digits == 0 || value > 255) return std::nullopt;
        v[i] = value;
        while (pos < s.size() && is_blank(s[pos])) ++pos;
        const char expected = i < 2 ? ',' : ')';
        if (pos >= s.size() || s[pos] != expected) return std::nullopt;
        ++pos;
    }
    if (pos != s.size()) return std::nullopt;
    return Rgb8{static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]),
                static_cast<std::uint8_t>(v[2])};
}

double degrees(double rad) { return rad * 180.0 / std::numbers::pi; }
double radians(double deg) { return deg * std::numbers::pi / 180.0; }

double hue_degrees(double a, double b) {
    if (a == 0.0 && b == 0.0) return 0.0;
    double h = degrees(std::atan2(b, a));
    if (h < 0.0) h += 360.0;
    return h;
}

std::uint8_t quantize(double linear) {
    const double v = encode_gamma(std::clamp(linear, 0.0, 1.0)) * 255.0;
    return static_cast<std::uint8_t>(std::clamp(round_half_even(v), 0.0, 255.0));
}

}  // namespace

bool LabColor::finite() const noexcept {
    return std::isfinite(L) && std::isfinite(a) && std::isfinite(b);
}

std::string_view to_string(ColorFormat f) noexcept {
    return f == ColorFormat::hex ? "hex" : "rgb";
}

std::optional<ParsedColor> parse_color(std::string_view text) noexcept {
    if (auto hex = parse_hex(text)) return ParsedColor{ColorFormat::hex, *hex};
    if (auto rgb = parse_rgb(text)) return ParsedColor{ColorFormat::rgb, *rgb};
    return std::nullopt;
}

std::string format_color(const Rgb8& c, ColorFormat f) {
    std::ostringstream os;
    if (f == ColorFormat::hex) {
        static constexpr char kDigits[] = "0123456789ABCDEF";
        os << '#';
        for (const std::uint8_t v : {c.r, c.g, c.b}) os << kDigits[v >> 4] << kDigits[v & 15];
    } else {
        os << "rgb(" << int(c.r) << ", " << int(c.g) << ", " << int(c.b) << ')';
    }
    return os.str();
}

LabColor srgb_to_lab(const Rgb8& c) noexcept {
    return linear_srgb_to_lab({decode_gamma(c.r / 255.0), decode_gamma(c.g / 255.0), decode_gamma(c.b / 255.0)});
}

LabColor linear_srgb_to_lab(const std::array<double, 3>& lin) noexcept {
    double xyz[3];
    for (int i = 0; i < 3; ++i) {
        xyz[i] = kToXyz[i][0] * lin[0] + kToXyz[i][1] * lin[1] + kToXyz[i][2] * lin[2];
    }
    const double fx = lab_f(xyz[0] / kXn);
    const double fy = lab_f(xyz[1] / kYn);
    const double fz = lab_f(xyz[2] / kZn);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

SrgbResult lab_to_srgb(const LabColor& c) noexcept {
    const double fy = (c.L + 16.0) / 116.0;
    const double fx = fy + c.a / 500.0;
    const double fz = fy - c.b / 200.0;
    const double xyz[3] = {lab_f_inv(fx) * kXn, lab_f_inv(fy) * kYn, lab_f_inv(fz) * kZn};

    SrgbResult out;
    for (int i = 0; i < 3; ++i) {
        out.linear[i] =
            kFromXyz[i][0] * xyz[0] + kFromXyz[i][1] * xyz[1] + kFromXyz[i][2] * xyz[2];
    }
    out.in_gamut = std::all_of(out.linear.begin(), out.linear.end(), [](double v) {
        return std::isfinite(v) && v >= -kGamutEpsilon && v <= 1.0 + kGamutEpsilon;
    });
    out.clipped = {quantize(out.linear[0]), quantize(out.linear[1]), quantize(out.linear[2])};
    return out;
}

bool in_srgb_gamut(const LabColor& c) noexcept { return lab_to_srgb(c).in_gamut; }

double round_half_even(double x) noexcept {
    const double lo = std::floor(x);
    const double diff = x - lo;
    if (diff < 0.5) return lo;
    if (diff > 0.5) return lo + 1.0;
    return std::fmod(lo, 2.0) == 0.0 ? lo : lo + 1.0;
}

double delta_e_2000(const LabColor& c1, const LabColor& c2) noexcept {
    constexpr double k25_7 = 6103515625.0;  // 25^7

    const double C1 = std::hypot(c1.a, c1.b);
    const double C2 = std::hypot(c2.a, c2.b);
    const double Cbar = 0.5 * (C1 + C2);
    const double Cbar7 = std::pow(Cbar, 7.0);
    const double G = 0.5 * (1.0 - std::sqrt(Cbar7 / (Cbar7 + k25_7)));

    const double a1p = (1.0 + G) * c1.a;
    const double a2p = (1.0 + G) * c2.a;
    const double C1p = std::hypot(a1p, c1.b);
    const double C2p = std::hypot(a2p, c2.b);
    const double h1p = hue_degrees(a1p, c1.b);
    const double h2p = hue_degrees(a2p, c2.b);

    const double dLp = c2.L - c1.L;
    const double dCp = C2p - C1p;
    const double Cprod = C1p * C2p;

    double dhp = 0.0;
    if (Cprod != 0.0) {
        dhp = h2p - h1p;
        if (dhp > 180.0) {
            dhp -= 360.0;
        } else if (dhp < -180.0) {
            dhp += 360.0;
        }
    }
    const double dHp = 2.0 * std::sqrt(Cprod) * std::sin(radians(dhp / 2.0));

    const double Lbarp = 0.5 * (c1.L + c2.L);
    const double Cbarp = 0.5 * (C1p + C2p);
    double hbarp = h1p + h2p;
    if (Cprod != 0.0) {
        if (std::abs(h1p - h2p) <= 180.0) {
            hbarp = 0.5 * (h1p + h2p);
        } else if (h1p + h2p < 360.0) {
            hbarp = 0.5 * (h1p + h2p + 360.0);
        } else {
            hbarp = 0.5 * (h1p + h2p - 360.0);
        }
    }

    const double T = 1.0 - 0.17 * std::cos(radians(hbarp - 30.0)) +
                     0.24 * std::cos(radians(2.0 * hbarp)) +
                     0.32 * std::cos(radians(3.0 * hbarp + 6.0)) -
                     0.20 * std::cos(radians(4.0 * hbarp - 63.0));
    const double dTheta = 30.0 * std::exp(-std::pow((hbarp - 275.0) / 25.0, 2.0));
    const double Cbarp7 = std::pow(Cbarp, 7.0);
    const double RC = 2.0 * std::sqrt(Cbarp7 / (Cbarp7 + k25_7));
    const double Lm50sq = (Lbarp - 50.0) * (Lbarp - 50.0);
    const double SL = 1.0 + 0.015 * Lm50sq / std::sqrt(20.0 + Lm50sq);
    const double SC = 1.0 + 0.045 * Cbarp;
    const double SH = 1.0 + 0.015 * Cbarp * T;
    const double RT = -std::sin(radians(2.0 * dTheta)) * RC;

    const double tL = dLp / SL;
    const double tC = dCp / SC;
    const double tH = dHp / SH;
    return std::sqrt(std::max(0.0, tL * tL + tC * tC + tH * tH + RT * tC * tH));
}

NamedColorTable::NamedColorTable(std::vector<NamedColor> entries) : entries_(std::move(entries)) {
    std::unordered_set<std::string> seen;
    for (const auto& e : entries_) {
        if (e.name.empty()) throw Error("named color with empty name");
        if (!seen.insert(e.name).second) throw Error("duplicate color name: " + e.name);
        if (!e.lab.finite()) throw Error("non-finite Lab value for color " + e.name);
    }
}

NamedColorTable NamedColorTable::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open named-color table: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

NamedColorTable NamedColorTable::parse(std::string_view text) {
    std::vector<NamedColor> entries;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;

        std::vector<std::string_view> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == '\t') {
                fields.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        const auto fail = [&](const std::string& why) {
            return FormatError(FormatError::Kind::malformed,
                               "named-color table line " + std::to_string(line_no) + ": " + why);
        };
        if (fields.size() != 4) throw fail("expected name<TAB>L<TAB>a<TAB>b");
        double v[3];
        for (int i = 0; i < 3; ++i) {
            const auto f = fields[i + 1];
            const auto res = std::from_chars(f.data(), f.data() + f.size(), v[i]);
            if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
                throw fail("bad number '" + std::string(f) + "'");
            }
        }
        entries.push_back({std::string(fields[0]), {v[0], v[1], v[2]}});
    }
    return NamedColorTable(std::move(entries));
}

NamedMatch nearest_named(const LabColor& c, const NamedColorTable& table) {
    if (table.empty()) throw Error("empty vocabulary");
    const NamedColor* best = nullptr;
    double best_de = 0.0;
    for (const auto& e : table.entries()) {
        const double de = delta_e_2000(c, e.lab);
        if (best == nullptr || de < best_de || (de == best_de && e.name < best->name)) {
            best = &e;
            best_de = de;
        }
    }
    return {best->name, best_de};
}

}  // namespace numcolor
