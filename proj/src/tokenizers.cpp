#include "numcolor/tokenizers.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "numcolor/detail/utf8.hpp"
#include "numcolor/error.hpp"

namespace numcolor {

namespace {

using detail::Utf8Text;

Token make_token(const Utf8Text& text, std::size_t begin, std::size_t end, const char* scheme) {
    return {std::string(text.bytes_of(begin, end)), begin, end, scheme};
}

// Scalar ranges [begin, end) of whitespace-separated words.
std::vector<std::pair<std::size_t, std::size_t>> words(const Utf8Text& text) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && detail::is_ascii_space(text[i].cp)) ++i;
        if (i == text.size()) break;
        const std::size_t start = i;
        while (i < text.size() && !detail::is_ascii_space(text[i].cp)) ++i;
        out.emplace_back(start, i);
    }
    return out;
}

}  // namespace

std::vector<Token> tokenize_whitespace(std::string_view text) {
    const Utf8Text t(text);
    std::vector<Token> out;
    for (const auto& [b, e] : words(t)) out.push_back(make_token(t, b, e, "whitespace"));
    return out;
}

std::vector<Token> tokenize_chars(std::string_view text) {
    const Utf8Text t(text);
    std::vector<Token> out;
    out.reserve(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) out.push_back(make_token(t, i, i + 1, "char"));
    return out;
}

BpeModel::BpeModel(std::vector<std::pair<std::string, std::string>> merges)
    : merges_(std::move(merges)) {
    for (std::size_t i = 0; i < merges_.size(); ++i) {
        if (!ranks_.emplace(merges_[i], static_cast<long>(i)).second) {
            throw Error("duplicate BPE merge '" + merges_[i].first + " " + merges_[i].second + "'");
        }
    }
}

BpeModel BpeModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open merges file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

BpeModel BpeModel::parse(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> merges;
    std::set<std::string> known;
    const auto is_symbol = [&](const std::string& s) {
        return Utf8Text(s).size() == 1 || known.count(s) > 0;
    };
    std::size_t line_no = 0;
    std::set<std::pair<std::string, std::string>> seen;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line_no == 1 && line.starts_with("#version")) continue;
        if (line.empty()) continue;
        const auto fail = [&](const std::string& why) {
            return FormatError(FormatError::Kind::malformed,
                               "merges line " + std::to_string(line_no) + ": " + why);
        };
        const std::size_t sp = line.find(' ');
        if (sp == std::string_view::npos || sp == 0 || sp + 1 >= line.size() ||
            line.find(' ', sp + 1) != std::string_view::npos) {
            throw fail("expected exactly two space-separated symbols");
        }
        std::pair<std::string, std::string> merge{std::string(line.substr(0, sp)),
                                                  std::string(line.substr(sp + 1))};
        if (!is_symbol(merge.first) || !is_symbol(merge.second)) {
            throw fail("merge uses a symbol not produced by earlier merges");
        }
        if (!seen.insert(merge).second) throw fail("duplicate merge");
        known.insert(merge.first + merge.second);
        merges.push_back(std::move(merge));
    }
    return BpeModel(std::move(merges));
}

long BpeModel::rank(const std::string& left, const std::string& right) const {
    const auto it = ranks_.find({left, right});
    return it == ranks_.end() ? -1 : it->second;
}

std::vector<Token> tokenize_bpe(const BpeModel& model, std::string_view text) {
    const Utf8Text t(text);
    std::vector<Token> out;
    struct Piece {
        std::string symbol;
        std::size_t start;
        std::size_t end;
    };
    for (const auto& [wb, we] : words(t)) {
        std::vector<Piece> pieces;
        for (std::size_t i = wb; i < we; ++i) {
            pieces.push_back({std::string(t.bytes_of(i, i + 1)), i, i + 1});
        }
        while (pieces.size() > 1) {
            long best = -1;
            for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
                const long r = model.rank(pieces[i].symbol, pieces[i + 1].symbol);
                if (r >= 0 && (best < 0 || r < best)) best = r;
            }
            if (best < 0) break;
            const auto& [left, right] = model.merges()[static_cast<std::size_t>(best)];
            std::vector<Piece> merged;
            merged.reserve(pieces.size());
            for (std::size_t i = 0; i < pieces.size(); ++i) {
                if (i + 1 < pieces.size() && pieces[i].symbol == left &&
                    pieces[i + 1].symbol == right) {
                    merged.push_back({left + right, pieces[i].start, pieces[i + 1].end});
                    ++i;
                } else {
                    merged.push_back(std::move(pieces[i]));
                }
            }
            pieces = std::move(merged);
        }
        for (const auto& p : pieces) out.push_back(make_token(t, p.start, p.end, "bpe"));
    }
    return out;
}

Tokenizer Tokenizer::whitespace() { return {Kind::whitespace, "whitespace"}; }
Tokenizer Tokenizer::chars() { return {Kind::chars, "char"}; }
Tokenizer Tokenizer::bpe(BpeModel model, std::string name) {
    return {Kind::bpe, std::move(name), std::move(model)};
}

std::vector<Token> Tokenizer::operator()(std::string_view text) const {
    std::vector<Token> out;
    switch (kind_) {
        case Kind::whitespace: out = tokenize_whitespace(text); break;
        case Kind::chars: out = tokenize_chars(text); break;
        case Kind::bpe: out = tokenize_bpe(model_, text); break;
    }
    for (auto& tok : out) tok.scheme = name_;
    return out;
}

}  // namespace numcolor
