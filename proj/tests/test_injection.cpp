#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "numcolor/codebook.hpp"
#include "numcolor/corpus.hpp"
#include "numcolor/error.hpp"
#include "numcolor/injection.hpp"

using namespace numcolor;

namespace {

ColorBook small_book(std::size_t dim) {
    ColorBook book(build_anchor_grid(20), dim, 20, 2.0, 4);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> row(dim);
    for (std::size_t i = 0; i < book.size(); ++i) {
        for (auto& v : row) v = n(rng);
        book.set_embedding(i, row);
    }
    return book;
}

RowMatrix distinct_rows(std::size_t T, std::size_t d) {
    RowMatrix m(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 1000.0 + static_cast<double>(i);
    return m;
}

Token tok(std::string s, std::size_t start) {
    const std::size_t n = s.size();
    return {std::move(s), start, start + n, "manual"};
}

// Walks the original rows once, emitting one embedding per op range.
RowMatrix remap_reference(const RowMatrix& seq, const InjectionPlan& plan) {
    auto ops = plan.ops;
    std::sort(ops.begin(), ops.end(), [](const auto& a, const auto& b) { return a.token_start < b.token_start; });
    std::vector<Eigen::RowVectorXd> rows;
    std::size_t next = 0;
    for (Eigen::Index i = 0; i < seq.rows(); ++i) {
        const auto u = static_cast<std::size_t>(i);
        if (next < ops.size() && u == ops[next].token_start) {
            rows.push_back(Eigen::Map<const Eigen::RowVectorXd>(ops[next].embedding.data(), seq.cols()));
            i = static_cast<Eigen::Index>(ops[next].token_end) - 1;
            ++next;
        } else {
            rows.push_back(seq.row(i));
        }
    }
    RowMatrix out(static_cast<Eigen::Index>(rows.size()), seq.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows[i];
    return out;
}

}  // namespace

TEST_CASE("two four-token spans in twelve tokens") {
    const auto book = small_book(4);
    const std::vector<Token> toks{tok("a", 0),     tok("#", 2),  tok("FF", 3), tok("57", 5),
                                  tok("33", 7),    tok("and", 10), tok("then", 14), tok("#", 19),
                                  tok("00", 20),   tok("FF", 22), tok("00", 24), tok("x", 27)};
    std::vector<Tag> tags;
    for (char c : std::string("OBIIIOOBIIIO")) tags.push_back(tag_from_char(c));
    const auto plan = plan_injection(toks, tags, book);
    REQUIRE(plan.ops.size() == 2);
    CHECK(plan.original_len == 12);
    CHECK(plan.final_len == 6);
    CHECK(plan.ops[0].token_start == 7);
    CHECK(plan.ops[0].token_end == 11);
    CHECK(plan.ops[1].token_start == 1);
    CHECK(plan.ops[1].token_end == 5);

    const auto emb_a = interpolate(book, srgb_to_lab({255, 87, 51}));
    const auto emb_b = interpolate(book, srgb_to_lab({0, 255, 0}));
    CHECK(plan.ops[1].embedding == emb_a);
    CHECK(plan.ops[0].embedding == emb_b);

    const auto seq = distinct_rows(12, 4);
    const auto out = apply_plan(seq, plan);
    REQUIRE(out.rows() == 6);
    const auto row = [](const std::vector<double>& v) { return Eigen::Map<const Eigen::RowVectorXd>(v.data(), 4); };
    CHECK(out.row(0) == seq.row(0));
    CHECK(out.row(1) == row(emb_a));
    CHECK(out.row(2) == seq.row(5));
    CHECK(out.row(3) == seq.row(6));
    CHECK(out.row(4) == row(emb_b));
    CHECK(out.row(5) == seq.row(11));

    // Splicing left to right without shifting indices lands the second op on the wrong rows.
    auto naive = plan;
    std::reverse(naive.ops.begin(), naive.ops.end());
    CHECK_THROWS_AS((void)apply_plan(seq, naive), Error);
}

TEST_CASE("empty and full plans") {
    const auto book = small_book(3);
    const auto toks = tokenize_whitespace("plain words only");
    const std::vector<Tag> tags(toks.size(), Tag::O);
    const auto plan = plan_injection(toks, tags, book);
    CHECK(plan.ops.empty());
    CHECK(plan.final_len == plan.original_len);
    const auto seq = distinct_rows(toks.size(), 3);
    CHECK(apply_plan(seq, plan) == seq);

    const auto chars = tokenize_chars("#A0B0C0");
    std::vector<Tag> all(chars.size(), Tag::I);
    all[0] = Tag::B;
    const auto full = plan_injection(chars, all, book);
    const auto one = apply_plan(distinct_rows(chars.size(), 3), full);
    REQUIRE(one.rows() == 1);
    const auto e = interpolate(book, srgb_to_lab({0xA0, 0xB0, 0xC0}));
    CHECK(one.row(0) == Eigen::Map<const Eigen::RowVectorXd>(e.data(), 3));
}

TEST_CASE("unparseable groups are dropped") {
    const auto book = small_book(3);
    const std::vector<Token> toks{tok("#GG1122", 0), tok("and", 8), tok("#112233", 12)};
    const std::vector<Tag> tags{Tag::B, Tag::O, Tag::B};
    const auto plan = plan_injection(toks, tags, book);
    CHECK(plan.dropped == 1);
    CHECK(plan.ops.size() == 1);
    CHECK(plan.final_len == 3);
    CHECK_THROWS_AS((void)plan_injection(toks, {Tag::I, Tag::O, Tag::O}, book), Error);
}

TEST_CASE("apply_plan validates its input") {
    const auto book = small_book(3);
    const auto toks = tokenize_chars("#112233");
    std::vector<Tag> tags(toks.size(), Tag::I);
    tags[0] = Tag::B;
    const auto plan = plan_injection(toks, tags, book);
    CHECK_THROWS_AS((void)apply_plan(distinct_rows(6, 3), plan), Error);
    CHECK_THROWS_AS((void)apply_plan(distinct_rows(7, 5), plan), Error);
}

TEST_CASE("generated prompts splice like the remapping reference") {
    const auto book = small_book(5);
    const auto bank = PhraseBank::load(std::string(std::getenv("NUMCOLOR_DATA_DIR")) + "/phrases.txt");
    const auto corpus = gen_tagger_corpus(2000, bank, {Tokenizer::chars()}, 3);
    auto records = corpus.train;
    records.insert(records.end(), corpus.valid.begin(), corpus.valid.end());
    std::size_t multi = 0;
    for (const auto& rec : records) {
        const auto plan = plan_injection(rec.tokens, rec.tags, book);
        if (plan.ops.size() < 2) continue;
        ++multi;
        std::size_t removed = 0;
        for (const auto& op : plan.ops) removed += op.token_end - op.token_start - 1;
        CHECK(plan.final_len == plan.original_len - removed);
        for (std::size_t i = 1; i < plan.ops.size(); ++i) CHECK(plan.ops[i].token_end <= plan.ops[i - 1].token_start);
        const auto seq = distinct_rows(rec.tokens.size(), 5);
        const auto out = apply_plan(seq, plan);
        CHECK(out == remap_reference(seq, plan));
    }
    CHECK(multi >= 1000);
}

TEST_CASE("plan json") {
    const auto book = small_book(3);
    const auto toks = tokenize_whitespace("a #FF5733 car");
    const auto plan = plan_injection(toks, {Tag::O, Tag::B, Tag::O}, book);
    const auto j = plan.to_json();
    CHECK(j["final_len"] == 3);
    CHECK(j["ops"][0]["rgb"] == nlohmann::ordered_json::array({255, 87, 51}));
    CHECK(j["ops"][0]["format"] == "hex");
}
