#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "numcolor/corpus.hpp"
#include "numcolor/error.hpp"
#include "support.hpp"

using namespace numcolor;

namespace {

PhraseBank bundled_bank() {
    return PhraseBank::load(std::string(std::getenv("NUMCOLOR_DATA_DIR")) + "/phrases.txt");
}

std::vector<Tokenizer> three_schemes() {
    const auto merges = BpeModel::load(std::string(std::getenv("NUMCOLOR_DATA_DIR")) + "/merges.txt");
    return {Tokenizer::whitespace(), Tokenizer::chars(), Tokenizer::bpe(merges)};
}

std::uint32_t key(const Rgb8& c) { return (std::uint32_t{c.r} << 16) | (std::uint32_t{c.g} << 8) | c.b; }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("buckets, formats and splits") {
    const auto bank = bundled_bank();
    const auto corpus = gen_tagger_corpus(100, bank, three_schemes(), 5);
    REQUIRE(corpus.prompts.size() == 100);
    std::array<std::size_t, 5> buckets{};
    std::size_t hex = 0, rgb = 0, valid = 0;
    std::set<std::uint32_t> train_colors, valid_colors;
    for (const auto& p : corpus.prompts) {
        ++buckets.at(p.planted.size());
        valid += p.validation;
        for (const auto& s : p.planted) {
            (s.format == ColorFormat::hex ? hex : rgb) += 1;
            (p.validation ? valid_colors : train_colors).insert(key(s.parsed));
            CHECK(is_validation_color(s.parsed, 5) == p.validation);
        }
    }
    for (auto b : buckets) CHECK(b == 20);
    CHECK((hex > rgb ? hex - rgb : rgb - hex) <= 1);
    CHECK(valid == 10);
    for (auto c : valid_colors) CHECK(train_colors.count(c) == 0);
    CHECK(corpus.train.size() == 270);
    CHECK(corpus.valid.size() == 30);
    CHECK(corpus.manifest()["shared_colors"] == 0);
    CHECK(corpus.manifest()["buckets"] == nlohmann::ordered_json::array({20, 20, 20, 20, 20}));
}

TEST_CASE("records agree with the detector") {
    const auto corpus = gen_tagger_corpus(500, bundled_bank(), three_schemes(), 6);
    for (const auto& p : corpus.prompts) {
        CHECK(find_color_spans(p.text) == p.planted);
        CHECK(p.text.size() <= kMaxPromptChars);
    }
    for (const auto* split : {&corpus.train, &corpus.valid}) {
        for (const auto& r : *split) {
            CHECK(is_valid_bio(r.tags));
            CHECK(r.tags.size() == r.tokens.size());
            const auto spans = find_color_spans(r.text);
            CHECK(spans_to_bio(r.tokens, spans).tags == r.tags);
            CHECK(parse_tag_groups(r.tokens, r.tags).spans == spans);
        }
    }
}

TEST_CASE("generation is deterministic") {
    const auto bank = bundled_bank();
    const auto a = gen_tagger_corpus(200, bank, three_schemes(), 7);
    const auto b = gen_tagger_corpus(200, bank, three_schemes(), 7);
    CHECK(to_jsonl(a.train) == to_jsonl(b.train));
    CHECK(to_jsonl(a.valid) == to_jsonl(b.valid));
    CHECK(a.manifest().dump() == b.manifest().dump());
    const auto c = gen_tagger_corpus(200, bank, three_schemes(), 8);
    CHECK(to_jsonl(a.train) != to_jsonl(c.train));

    const std::filesystem::path d1 = testing::temp_path("corpus-a");
    const std::filesystem::path d2 = testing::temp_path("corpus-b");
    std::filesystem::create_directories(d1);
    std::filesystem::create_directories(d2);
    write_corpus(d1.string(), a);
    write_corpus(d2.string(), b);
    for (const char* f : {"train.jsonl", "valid.jsonl", "manifest.json"}) CHECK(slurp(d1 / f) == slurp(d2 / f));
    CHECK(read_jsonl((d1 / "train.jsonl").string()) == a.train);
}

TEST_CASE("input validation") {
    const auto bank = bundled_bank();
    CHECK_THROWS_AS((void)gen_tagger_corpus(12, bank, three_schemes(), 1), Error);
    CHECK_THROWS_AS((void)gen_tagger_corpus(0, bank, three_schemes(), 1), Error);
    CHECK_THROWS_AS((void)gen_tagger_corpus(10, bank, {}, 1), Error);
    CHECK_THROWS_AS((void)PhraseBank::parse("[objects]\ncar\n"), Error);
    CHECK_THROWS_AS((void)PhraseBank::parse("[objects]\ncar #FF5733\n[connectors]\nwith\n"), Error);
    CHECK_THROWS_AS((void)PhraseBank::parse("car\n"), Error);
    CHECK_THROWS_AS((void)PhraseBank::parse("[colours]\ncar\n"), Error);
    CHECK_THROWS_AS((void)parse_jsonl("{\"scheme\": 1}\n"), Error);
}

TEST_CASE("jsonl round trip") {
    const auto corpus = gen_tagger_corpus(50, bundled_bank(), three_schemes(), 9);
    const auto text = to_jsonl(corpus.train);
    CHECK(parse_jsonl(text) == corpus.train);
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(corpus.train.size()));
}

TEST_CASE("template prompts") {
    CHECK(kPromptTemplates.size() == 27);
    const auto one = gen_template_prompts({"car"}, {{255, 87, 51}}, 0);
    REQUIRE(one.size() == 27);
    CHECK(one[22].template_id == 23);
    CHECK(one[22].text == "A car in rgb(255, 87, 51)");
    for (const auto& p : one) {
        const auto spans = find_color_spans(p.text);
        REQUIRE(spans.size() == 1);
        CHECK(spans[0].parsed == Rgb8{255, 87, 51});
        CHECK(spans[0].format == p.format);
    }
    const auto many = gen_template_prompts({"car", "vase"}, {{1, 2, 3}, {200, 100, 50}}, 3);
    CHECK(many.size() == 108);
    CHECK(many[0].object == "car");
    CHECK(many.back().object == "vase");
    std::size_t hex = 0;
    for (const auto& p : many) hex += p.format == ColorFormat::hex;
    CHECK(hex > 0);
    CHECK(hex < many.size());
    CHECK(gen_template_prompts({"car"}, {{9, 9, 9}}, 3)[0].text == gen_template_prompts({"car"}, {{9, 9, 9}}, 3)[0].text);
    CHECK_THROWS_AS((void)gen_template_prompts({}, {{1, 2, 3}}, 0), Error);
}
