#include "numcolor/injection.hpp"

#include <algorithm>

#include "numcolor/error.hpp"

namespace numcolor {

InjectionPlan plan_injection(const std::vector<Token>& tokens, const std::vector<Tag>& tags,
                             const ColorBook& book) {
    if (!is_valid_bio(tags)) throw Error("plan_injection: tags are not valid BIO");
    const auto groups = parse_tag_groups(tokens, tags);
    InjectionPlan plan;
    plan.original_len = tokens.size();
    plan.final_len = tokens.size();
    plan.dropped = groups.dropped;
    for (std::size_t g = 0; g < groups.spans.size(); ++g) {
        const auto [b, e] = groups.token_ranges[g];
        plan.ops.push_back({b, e, interpolate(book, groups.spans[g].lab), groups.spans[g]});
        plan.final_len -= e - b - 1;
    }
    std::reverse(plan.ops.begin(), plan.ops.end());
    return plan;
}

RowMatrix apply_plan(const RowMatrix& seq, const InjectionPlan& plan) {
    if (static_cast<std::size_t>(seq.rows()) != plan.original_len) {
        throw Error("apply_plan: sequence has " + std::to_string(seq.rows()) + " rows, plan expects " +
                    std::to_string(plan.original_len));
    }
    RowMatrix cur = seq;
    for (const auto& op : plan.ops) {
        if (op.embedding.size() != static_cast<std::size_t>(seq.cols())) {
            throw Error("apply_plan: embedding width differs from sequence width");
        }
        const auto rows = cur.rows();
        const auto s = static_cast<Eigen::Index>(op.token_start);
        const auto e = static_cast<Eigen::Index>(op.token_end);
        if (!(s < e && e <= rows)) throw Error("apply_plan: op range out of bounds");
        RowMatrix next(rows - (e - s) + 1, cur.cols());
        next.topRows(s) = cur.topRows(s);
        next.row(s) = Eigen::Map<const Eigen::RowVectorXd>(op.embedding.data(), cur.cols());
        next.bottomRows(rows - e) = cur.bottomRows(rows - e);
        cur = std::move(next);
    }
    if (static_cast<std::size_t>(cur.rows()) != plan.final_len) throw Error("apply_plan: final length mismatch");
    return cur;
}

nlohmann::ordered_json InjectionPlan::to_json() const {
    nlohmann::ordered_json j;
    j["original_len"] = original_len;
    j["final_len"] = final_len;
    j["dropped"] = dropped;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& op : ops) {
        nlohmann::ordered_json o;
        o["token_start"] = op.token_start;
        o["token_end"] = op.token_end;
        o["char_start"] = op.source.start;
        o["char_end"] = op.source.end;
        o["format"] = std::string(to_string(op.source.format));
        o["rgb"] = {op.source.parsed.r, op.source.parsed.g, op.source.parsed.b};
        o["lab"] = {op.source.lab.L, op.source.lab.a, op.source.lab.b};
        o["embedding_digest"] = embedding_digest(op.embedding);
        arr.push_back(std::move(o));
    }
    j["ops"] = std::move(arr);
    return j;
}

}  // namespace numcolor
