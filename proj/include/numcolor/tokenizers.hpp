#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace numcolor {

/// A token as a slice of the original prompt. Offsets count Unicode scalar
/// values, half-open.
struct Token {
    std::string surface;
    std::size_t start = 0;
    std::size_t end = 0;
    std::string scheme;

    friend bool operator==(const Token&, const Token&) = default;
};

/// Maximal runs of non-whitespace; whitespace is not tokenized.
[[nodiscard]] std::vector<Token> tokenize_whitespace(std::string_view text);

/// One token per scalar value, whitespace included.
[[nodiscard]] std::vector<Token> tokenize_chars(std::string_view text);

/// Ordered BPE merge table; a pair's rank is its position in the file.
class BpeModel {
public:
    BpeModel() = default;
    explicit BpeModel(std::vector<std::pair<std::string, std::string>> merges);

    /// Reads one space-separated pair per line; an optional first line
    /// starting with "#version" is skipped. Blank lines are ignored.
    static BpeModel load(const std::string& path);
    static BpeModel parse(std::string_view text);

    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& merges() const noexcept {
        return merges_;
    }
    /// Rank of a pair or -1 when it is not a merge.
    [[nodiscard]] long rank(const std::string& left, const std::string& right) const;

private:
    std::vector<std::pair<std::string, std::string>> merges_;
    std::map<std::pair<std::string, std::string>, long> ranks_;
};

/// Whitespace pre-tokenization, then greedy lowest-rank merging inside each word.
[[nodiscard]] std::vector<Token> tokenize_bpe(const BpeModel& model, std::string_view text);

/// Named tokenization scheme so corpora can mix several of them.
class Tokenizer {
public:
    enum class Kind { whitespace, chars, bpe };

    static Tokenizer whitespace();
    static Tokenizer chars();
    static Tokenizer bpe(BpeModel model, std::string name = "bpe");

    [[nodiscard]] std::vector<Token> operator()(std::string_view text) const;
    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Tokenizer(Kind kind, std::string name, BpeModel model = {})
        : kind_(kind), name_(std::move(name)), model_(std::move(model)) {}

    Kind kind_;
    std::string name_;
    BpeModel model_;
};

}  // namespace numcolor
