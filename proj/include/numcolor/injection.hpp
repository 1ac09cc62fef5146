#pragma once

#include <cstddef>
#include <json.hpp>
#include <vector>

#include "numcolor/codebook.hpp"
#include "numcolor/matrix.hpp"
#include "numcolor/span_detector.hpp"
#include "numcolor/tokenizers.hpp"

namespace numcolor {

/// Replace token rows [token_start, token_end) with one embedding row.
struct InjectionOp {
    std::size_t token_start = 0;
    std::size_t token_end = 0;
    std::vector<double> embedding;
    ColorSpan source;
};

/// Ops are ordered by token_start descending so that splicing one never
/// shifts the indices of the ones still to come.
struct InjectionPlan {
    std::vector<InjectionOp> ops;
    std::size_t original_len = 0;
    std::size_t final_len = 0;
    std::size_t dropped = 0;  ///< tag groups that did not parse as a color

    [[nodiscard]] nlohmann::ordered_json to_json() const;
};

/// One op per parseable B I* group; embedding = interpolate(book, lab).
[[nodiscard]] InjectionPlan plan_injection(const std::vector<Token>& tokens, const std::vector<Tag>& tags,
                                           const ColorBook& book);

/// Applies the ops in order to a T x d sequence. Throws when T differs from
/// plan.original_len or an embedding width differs from d.
[[nodiscard]] RowMatrix apply_plan(const RowMatrix& seq, const InjectionPlan& plan);

}  // namespace numcolor
