#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "numcolor/colorspace.hpp"
#include "numcolor/span_detector.hpp"
#include "numcolor/tokenizers.hpp"

namespace numcolor {

/// Filler vocabulary for synthetic prompts. File format: `[section]` headers
/// (objects, connectors, styles, distractors) followed by one phrase per line;
/// `#` starts a comment line.
struct PhraseBank {
    std::vector<std::string> objects;
    std::vector<std::string> connectors;
    std::vector<std::string> styles;
    std::vector<std::string> distractors;

    static PhraseBank parse(std::string_view text);
    static PhraseBank load(const std::string& path);
};

inline constexpr std::size_t kMaxColorsPerPrompt = 4;
inline constexpr std::size_t kMaxPromptChars = 240;

struct CorpusPrompt {
    std::size_t id = 0;
    std::string text;
    std::vector<ColorSpan> planted;
    bool validation = false;
};

struct TaggerCorpus {
    std::uint64_t seed = 0;
    std::vector<std::string> schemes;
    std::vector<CorpusPrompt> prompts;
    std::vector<TaggedSequence> train;
    std::vector<TaggedSequence> valid;
    std::size_t boundary_warnings = 0;

    [[nodiscard]] nlohmann::ordered_json manifest() const;
};

/// Prompts split evenly over 0..4 planted colors, hex and rgb literals
/// balanced to within one, every prompt tokenized by every scheme and tagged
/// by the span detector. One prompt in ten per bucket is held out; held-out
/// colors come from a hash-defined tenth of the 8-bit cube that training
/// prompts never use. Throws unless n_prompts is a positive multiple of 5.
[[nodiscard]] TaggerCorpus gen_tagger_corpus(std::size_t n_prompts, const PhraseBank& bank,
                                             const std::vector<Tokenizer>& schemes, std::uint64_t seed);

/// True when the color belongs to the held-out pool for this seed.
[[nodiscard]] bool is_validation_color(const Rgb8& c, std::uint64_t seed) noexcept;

/// One JSON object per line: scheme, text, tokens [{surface, start, end}], tags.
[[nodiscard]] std::string to_jsonl(std::span<const TaggedSequence> records);
[[nodiscard]] std::vector<TaggedSequence> parse_jsonl(std::string_view text);
[[nodiscard]] std::vector<TaggedSequence> read_jsonl(const std::string& path);

/// Writes train.jsonl, valid.jsonl and manifest.json into `dir`.
void write_corpus(const std::string& dir, const TaggerCorpus& corpus);

extern const std::array<std::string_view, 27> kPromptTemplates;

struct TemplatePrompt {
    std::size_t template_id = 0;  ///< 1-based
    std::string text;
    std::string object;
    Rgb8 color;
    ColorFormat format = ColorFormat::hex;
};

/// Every template for every (object, color), object-major. Templates with a
/// generic color slot alternate hex and rgb; the seed picks the phase.
[[nodiscard]] std::vector<TemplatePrompt> gen_template_prompts(const std::vector<std::string>& objects,
                                                               const std::vector<Rgb8>& colors,
                                                               std::uint64_t seed);

}  // namespace numcolor
