#include "numcolor/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>

#include "numcolor/detail/binary_io.hpp"
#include "numcolor/detail/random.hpp"
#include "numcolor/detail/utf8.hpp"
#include "numcolor/error.hpp"

namespace numcolor {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::size_t scalar_length(std::string_view s) { return detail::Utf8Text(s).size(); }

const std::string& pick(detail::Rng& rng, const std::vector<std::string>& v) {
    return v[static_cast<std::size_t>(rng.below(v.size()))];
}

// Text assembled piece by piece while tracking scalar offsets of planted colors.
class PromptBuilder {
public:
    void word(std::string_view s) {
        if (!text_.empty()) add(" ");
        add(s);
    }
    void color(std::string_view literal, const Rgb8& c, ColorFormat f) {
        if (!text_.empty()) add(" ");
        const std::size_t start = scalars_;
        add(literal);
        planted_.push_back({start, scalars_, c, f, srgb_to_lab(c)});
    }
    [[nodiscard]] const std::string& text() const { return text_; }
    [[nodiscard]] std::size_t length() const { return scalars_; }
    [[nodiscard]] const std::vector<ColorSpan>& planted() const { return planted_; }

private:
    void add(std::string_view s) {
        text_ += s;
        scalars_ += scalar_length(s);
    }
    std::string text_;
    std::size_t scalars_ = 0;
    std::vector<ColorSpan> planted_;
};

std::string render_literal(detail::Rng& rng, const Rgb8& c, ColorFormat f) {
    char buf[48];
    if (f == ColorFormat::hex) {
        const bool lower = rng.uniform() < 0.35;
        std::snprintf(buf, sizeof buf, lower ? "#%02x%02x%02x" : "#%02X%02X%02X", c.r, c.g, c.b);
        return buf;
    }
    static constexpr const char* kForms[] = {"rgb(%u, %u, %u)", "rgb(%u,%u,%u)", "RGB(%u, %u, %u)",
                                             "RGB(%u,%u,%u)", "rgb( %u, %u, %u )", "Rgb(%u , %u , %u)"};
    static constexpr double kWeights[] = {0.4, 0.2, 0.15, 0.1, 0.1, 0.05};
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t form = 0;
    for (; form + 1 < std::size(kForms); ++form) {
        acc += kWeights[form];
        if (u < acc) break;
    }
    std::snprintf(buf, sizeof buf, kForms[form], unsigned{c.r}, unsigned{c.g}, unsigned{c.b});
    return buf;
}

Rgb8 draw_color(detail::Rng& rng, bool validation, std::uint64_t seed) {
    for (;;) {
        const Rgb8 c{static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
                     static_cast<std::uint8_t>(rng.below(256))};
        if (is_validation_color(c, seed) == validation) return c;
    }
}

struct PlannedColor {
    Rgb8 rgb;
    ColorFormat format;
};

PromptBuilder build_prompt(detail::Rng& rng, const PhraseBank& bank, const std::vector<PlannedColor>& colors,
                           bool optional_parts) {
    static const std::vector<std::string> kArticles{"a", "the", "one", "a", "an old", "a small", "a large"};
    PromptBuilder b;
    if (optional_parts && !bank.distractors.empty() && rng.uniform() < 0.3) b.word(pick(rng, bank.distractors));

    struct Segment {
        const PlannedColor* color;
    };
    std::vector<Segment> segments;
    for (const auto& c : colors) segments.push_back({&c});
    if (colors.empty()) {
        segments.push_back({nullptr});
        segments.push_back({nullptr});
    } else if (optional_parts && rng.uniform() < 0.3) {
        segments.insert(segments.begin() + static_cast<std::ptrdiff_t>(rng.below(segments.size() + 1)), {nullptr});
    }
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (s > 0) b.word(pick(rng, bank.connectors));
        const auto& object = pick(rng, bank.objects);
        const auto* c = segments[s].color;
        if (c == nullptr) {
            b.word(pick(rng, kArticles));
            b.word(object);
        } else if (rng.uniform() < 0.3) {
            b.word(pick(rng, kArticles));
            b.word(object);
            b.word(rng.uniform() < 0.5 ? "in" : "colored");
            b.color(render_literal(rng, c->rgb, c->format), c->rgb, c->format);
        } else {
            b.word(pick(rng, kArticles));
            b.color(render_literal(rng, c->rgb, c->format), c->rgb, c->format);
            b.word(object);
        }
    }
    if (optional_parts && !bank.styles.empty() && rng.uniform() < 0.7) b.word(pick(rng, bank.styles));
    if (optional_parts && !bank.distractors.empty() && rng.uniform() < 0.2) b.word(pick(rng, bank.distractors));
    return b;
}

std::string digest_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::ordered_json split_summary(const std::vector<TaggedSequence>& records,
                                     const std::vector<CorpusPrompt>& prompts, bool validation) {
    std::set<std::uint32_t> colors;
    std::size_t n = 0;
    for (const auto& p : prompts) {
        if (p.validation != validation) continue;
        ++n;
        for (const auto& s : p.planted) colors.insert((std::uint32_t{s.parsed.r} << 16) | (s.parsed.g << 8) | s.parsed.b);
    }
    const auto body = to_jsonl(records);
    nlohmann::ordered_json j;
    j["prompts"] = n;
    j["records"] = records.size();
    j["distinct_colors"] = colors.size();
    j["digest"] = digest_hex(detail::fnv1a64(body.data(), body.size()));
    return j;
}

}  // namespace

// ---- phrase bank ------------------------------------------------------------

PhraseBank PhraseBank::parse(std::string_view text) {
    PhraseBank bank;
    std::vector<std::string>* section = nullptr;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line == "[objects]") section = &bank.objects;
            else if (line == "[connectors]") section = &bank.connectors;
            else if (line == "[styles]") section = &bank.styles;
            else if (line == "[distractors]") section = &bank.distractors;
            else throw FormatError(FormatError::Kind::malformed, "phrases: unknown section at line " + std::to_string(line_no));
            continue;
        }
        if (section == nullptr) {
            throw FormatError(FormatError::Kind::malformed, "phrases: text before any section at line " + std::to_string(line_no));
        }
        if (!find_color_spans(line).empty()) {
            throw FormatError(FormatError::Kind::malformed, "phrases: color literal in phrase at line " + std::to_string(line_no));
        }
        section->emplace_back(line);
    }
    if (bank.objects.empty() || bank.connectors.empty()) throw Error("phrases: objects and connectors are required");
    return bank;
}

PhraseBank PhraseBank::load(const std::string& path) {
    const auto bytes = detail::read_file(path);
    return parse(std::string_view(bytes.data(), bytes.size()));
}

// ---- tagger corpus ----------------------------------------------------------

bool is_validation_color(const Rgb8& c, std::uint64_t seed) noexcept {
    const std::uint64_t key = (std::uint64_t{c.r} << 16) | (std::uint64_t{c.g} << 8) | c.b;
    return detail::hash_key(seed, 0x48454C44ULL, key) % 10 == 0;
}

TaggerCorpus gen_tagger_corpus(std::size_t n_prompts, const PhraseBank& bank, const std::vector<Tokenizer>& schemes,
                               std::uint64_t seed) {
    constexpr std::size_t kBuckets = kMaxColorsPerPrompt + 1;
    if (n_prompts == 0 || n_prompts % kBuckets != 0) throw Error("gen_tagger_corpus: n_prompts must be a positive multiple of 5");
    if (schemes.empty()) throw Error("gen_tagger_corpus: at least one tokenizer scheme is required");

    detail::Rng rng(detail::hash_key(seed, 0x434F5250ULL));
    std::vector<std::size_t> buckets;
    for (std::size_t b = 0; b < kBuckets; ++b) buckets.insert(buckets.end(), n_prompts / kBuckets, b);
    rng.shuffle(buckets.begin(), buckets.end());

    std::size_t slots = 0;
    for (const auto b : buckets) slots += b;
    std::vector<ColorFormat> formats(slots, ColorFormat::rgb);
    std::fill_n(formats.begin(), (slots + 1) / 2, ColorFormat::hex);
    rng.shuffle(formats.begin(), formats.end());

    TaggerCorpus corpus;
    corpus.seed = seed;
    for (const auto& s : schemes) corpus.schemes.push_back(s.name());
    std::array<std::size_t, kBuckets> seen{};
    std::size_t next_format = 0;
    for (std::size_t id = 0; id < n_prompts; ++id) {
        const std::size_t k = buckets[id];
        const bool validation = seen[k]++ % 10 == 9;
        detail::Rng prng(detail::hash_key(seed, 0x50524F4DULL, id));
        std::vector<PlannedColor> colors;
        for (std::size_t c = 0; c < k; ++c) colors.push_back({draw_color(prng, validation, seed), formats[next_format++]});

        PromptBuilder b = build_prompt(prng, bank, colors, true);
        if (b.length() > kMaxPromptChars) b = build_prompt(prng, bank, colors, false);
        if (b.length() > kMaxPromptChars) throw Error("gen_tagger_corpus: phrases too long for the prompt budget");

        const auto detected = find_color_spans(b.text());
        if (detected != b.planted()) throw Error("gen_tagger_corpus: detector disagrees with planted spans in prompt " + std::to_string(id));

        corpus.prompts.push_back({id, b.text(), b.planted(), validation});
        for (const auto& tok : schemes) {
            TaggedSequence rec;
            rec.scheme = tok.name();
            rec.text = b.text();
            rec.tokens = tok(rec.text);
            auto bio = spans_to_bio(rec.tokens, detected);
            corpus.boundary_warnings += bio.boundary_warnings;
            rec.tags = std::move(bio.tags);
            (validation ? corpus.valid : corpus.train).push_back(std::move(rec));
        }
    }
    return corpus;
}

nlohmann::ordered_json TaggerCorpus::manifest() const {
    std::array<std::size_t, kMaxColorsPerPrompt + 1> buckets{};
    std::size_t hex = 0;
    std::size_t rgb = 0;
    std::set<std::uint32_t> train_colors;
    std::set<std::uint32_t> valid_colors;
    for (const auto& p : prompts) {
        ++buckets[p.planted.size()];
        for (const auto& s : p.planted) {
            (s.format == ColorFormat::hex ? hex : rgb) += 1;
            const std::uint32_t key = (std::uint32_t{s.parsed.r} << 16) | (s.parsed.g << 8) | s.parsed.b;
            (p.validation ? valid_colors : train_colors).insert(key);
        }
    }
    std::vector<std::uint32_t> shared;
    std::set_intersection(train_colors.begin(), train_colors.end(), valid_colors.begin(), valid_colors.end(),
                          std::back_inserter(shared));
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["n_prompts"] = prompts.size();
    j["schemes"] = schemes;
    j["buckets"] = buckets;
    j["formats"] = {{"hex", hex}, {"rgb", rgb}};
    j["splits"] = {{"train", split_summary(train, prompts, false)}, {"valid", split_summary(valid, prompts, true)}};
    j["shared_colors"] = shared.size();
    j["boundary_warnings"] = boundary_warnings;
    return j;
}

// ---- JSONL --------------------------------------------------------------------

std::string to_jsonl(std::span<const TaggedSequence> records) {
    std::string out;
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["scheme"] = r.scheme;
        j["text"] = r.text;
        auto toks = nlohmann::ordered_json::array();
        for (const auto& t : r.tokens) {
            nlohmann::ordered_json o;
            o["surface"] = t.surface;
            o["start"] = t.start;
            o["end"] = t.end;
            toks.push_back(std::move(o));
        }
        j["tokens"] = std::move(toks);
        auto tags = nlohmann::ordered_json::array();
        for (const auto t : r.tags) tags.push_back(std::string(1, tag_char(t)));
        j["tags"] = std::move(tags);
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<TaggedSequence> parse_jsonl(std::string_view text) {
    std::vector<TaggedSequence> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const std::string_view line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            TaggedSequence r;
            r.scheme = j.at("scheme").get<std::string>();
            r.text = j.value("text", std::string{});
            for (const auto& t : j.at("tokens")) {
                r.tokens.push_back({t.at("surface").get<std::string>(), t.at("start").get<std::size_t>(),
                                    t.at("end").get<std::size_t>(), r.scheme});
            }
            for (const auto& t : j.at("tags")) {
                const auto s = t.get<std::string>();
                if (s.size() != 1) throw Error("bad tag");
                r.tags.push_back(tag_from_char(s[0]));
            }
            if (r.tags.size() != r.tokens.size()) throw Error("tags and tokens differ in length");
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw FormatError(FormatError::Kind::malformed,
                              "jsonl: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<TaggedSequence> read_jsonl(const std::string& path) {
    const auto bytes = detail::read_file(path);
    return parse_jsonl(std::string_view(bytes.data(), bytes.size()));
}

void write_corpus(const std::string& dir, const TaggerCorpus& corpus) {
    std::filesystem::create_directories(dir);
    const auto put = [&](const std::string& name, const std::string& body) {
        detail::write_file((std::filesystem::path(dir) / name).string(), std::vector<char>(body.begin(), body.end()));
    };
    put("train.jsonl", to_jsonl(corpus.train));
    put("valid.jsonl", to_jsonl(corpus.valid));
    put("manifest.json", corpus.manifest().dump(2) + "\n");
}

// ---- templates ----------------------------------------------------------------

const std::array<std::string_view, 27> kPromptTemplates{
    "A {color} {object}",
    "The {object} is {color}",
    "A photo of a {color} {object}",
    "A {object} that is entirely {color}",
    "An image of a {color} {object}",
    "A {color} colored {object}",
    "A single {color} {object}",
    "A {object}, and it\xE2\x80\x99s {color}",
    "A {object} in a {color} color",
    "A {object} rendered in {color} color",
    "A {object} with a {color} color",
    "A realistic {object} in {color}",
    "An image of a {object} in hex color {hex}",
    "A {object} in color {hex}",
    "A {object} with hex color {hex}",
    "A close-up of a {object} in the color {hex}",
    "A {object} rendered in {hex} color",
    "A photo of a {object} in the color {hex}",
    "A {object} rendered entirely in {hex}",
    "A {object} designed in {hex} color",
    "A realistic {hex}-colored {object}",
    "A highly detailed {object} in hex {hex}",
    "A {object} in rgb({r}, {g}, {b})",
    "A {object} with the color rgb({r}, {g}, {b})",
    "A {object} rendered in RGB color rgb({r}, {g}, {b})",
    "A photo of a {object} in color rgb({r}, {g}, {b})",
    "A {object} with color rgb({r}, {g}, {b})",
};

std::vector<TemplatePrompt> gen_template_prompts(const std::vector<std::string>& objects,
                                                 const std::vector<Rgb8>& colors, std::uint64_t seed) {
    if (objects.empty() || colors.empty()) throw Error("gen_template_prompts: objects and colors must be non-empty");
    const auto replace_all = [](std::string s, std::string_view key, const std::string& value) {
        for (std::size_t pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size())) {
            s.replace(pos, key.size(), value);
        }
        return s;
    };
    std::vector<TemplatePrompt> out;
    out.reserve(objects.size() * colors.size() * kPromptTemplates.size());
    std::uint64_t generic = seed % 2;
    for (const auto& object : objects) {
        for (const auto& c : colors) {
            for (std::size_t t = 0; t < kPromptTemplates.size(); ++t) {
                std::string s(kPromptTemplates[t]);
                ColorFormat f = ColorFormat::hex;
                if (s.find("{color}") != std::string::npos) {
                    f = (generic++ % 2 == 0) ? ColorFormat::hex : ColorFormat::rgb;
                    s = replace_all(s, "{color}", format_color(c, f));
                } else if (s.find("{hex}") != std::string::npos) {
                    s = replace_all(s, "{hex}", format_color(c, ColorFormat::hex));
                } else {
                    f = ColorFormat::rgb;
                    s = replace_all(s, "{r}", std::to_string(c.r));
                    s = replace_all(s, "{g}", std::to_string(c.g));
                    s = replace_all(s, "{b}", std::to_string(c.b));
                }
                s = replace_all(s, "{object}", object);
                out.push_back({t + 1, std::move(s), object, c, f});
            }
        }
    }
    return out;
}

}  // namespace numcolor
