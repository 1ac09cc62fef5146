#include <CLI11.hpp>
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "numcolor/codebook.hpp"
#include "numcolor/colorspace.hpp"
#include "numcolor/corpus.hpp"
#include "numcolor/crf.hpp"
#include "numcolor/cta.hpp"
#include "numcolor/geometry.hpp"
#include "numcolor/injection.hpp"
#include "numcolor/metrics.hpp"
#include "numcolor/parallel.hpp"

#include "ciede2000_pairs.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace numcolor;
using Json = nlohmann::ordered_json;

namespace {

struct Outcome {
    bool pass = false;
    std::string summary;
    Json data = Json::object();
};

struct Criterion {
    std::string id;
    std::string title;
    std::function<Outcome()> run;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string data_file(const char* name) { return std::string(NUMCOLOR_SOURCE_DIR) + "/data/" + name; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(NUMCOLOR_CLI) + " " + args + " > /dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

ColorBook seeded_book(double spacing, std::size_t dim) {
    ColorBook book(build_anchor_grid(spacing), dim, spacing);
    const auto table = NamedColorTable::load(data_file("css_colors.tsv"));
    const auto vectors = load_name_vectors(data_file("name_vectors_d16.tsv"));
    const auto ids = seed_from_names(book, table, vectors);
    propagate_init(book, ids);
    return book;
}

TaggedSequence tagged(const std::string& text, const Tokenizer& tok) {
    TaggedSequence s{tok.name(), text, tok(text), {}};
    s.tags = spans_to_bio(s.tokens, find_color_spans(text)).tags;
    return s;
}

std::vector<Tokenizer> three_schemes() {
    return {Tokenizer::whitespace(), Tokenizer::chars(), Tokenizer::bpe(BpeModel::load(data_file("merges.txt")))};
}

// ---- criteria -----------------------------------------------------------------

Outcome anchor_grid() {
    const auto t0 = Clock::now();
    const auto grid = build_anchor_grid(5.0);
    const double t = seconds_since(t0);
    Outcome o;
    const auto K = grid.size();
    o.pass = K >= 6200 && K <= 7200 && t < 5.0;
    o.summary = "K=" + std::to_string(K) + " (band 6200..7200, reference 6707), " + fmt("%.3f s", t);
    o.data = {{"K", K},
              {"reference_K", 6707},
              {"spacing", 5.0},
              {"grid_convention",
               {{"origin", {0, 0, 0}},
                {"L", {0, 100}},
                {"a", {-130, 130}},
                {"b", {-130, 130}},
                {"filter", "linear sRGB within [-1e-9, 1 + 1e-9]"},
                {"order", "L-major, then a, then b"}}},
              {"seconds", t}};
    return o;
}

Outcome ciede2000() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (const auto& c : testing::kCiede2000Pairs) {
        worst = std::max(worst, std::abs(delta_e_2000(c.c1, c.c2) - c.expected));
        worst = std::max(worst, std::abs(delta_e_2000(c.c2, c.c1) - c.expected));
    }
    const double t = seconds_since(t0);
    Outcome o;
    o.pass = worst <= 1e-4 && t < 1.0;
    o.summary = std::to_string(testing::kCiede2000Pairs.size()) + " pairs, max |err| " + fmt("%.2e", worst) + ", " +
                fmt("%.4f s", t);
    o.data = {{"pairs", testing::kCiede2000Pairs.size()}, {"max_abs_error", worst}, {"seconds", t}};
    return o;
}

Outcome round_trip() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> d(0, 255);
    std::size_t mismatches = 0;
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const Rgb8 c{static_cast<std::uint8_t>(d(rng)), static_cast<std::uint8_t>(d(rng)),
                     static_cast<std::uint8_t>(d(rng))};
        const auto lab = srgb_to_lab(c);
        const auto back = lab_to_srgb(lab);
        mismatches += !(back.clipped == c);
        const auto again = linear_srgb_to_lab(back.linear);
        worst = std::max({worst, std::abs(again.L - lab.L), std::abs(again.a - lab.a), std::abs(again.b - lab.b)});
    }
    Outcome o;
    o.pass = mismatches == 0 && worst < 1e-9;
    o.summary = "100000 colors, " + std::to_string(mismatches) + " mismatches, max Lab deviation " + fmt("%.2e", worst);
    o.data = {{"samples", 100000}, {"mismatches", mismatches}, {"max_lab_deviation", worst}};
    return o;
}

Outcome crf_oracle() {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst_z = 0.0;
    std::size_t viterbi_mismatch = 0;
    for (std::size_t T = 1; T <= 6; ++T) {
        const auto paths = testing::all_tag_paths(T);
        for (int trial = 0; trial < 1000; ++trial) {
            EmissionMatrix em(static_cast<Eigen::Index>(T), 3);
            for (Eigen::Index i = 0; i < em.size(); ++i) em.data()[i] = 2.0 * n(rng);
            CrfScores crf;
            for (Eigen::Index i = 0; i < 9; ++i) crf.transitions.data()[i] = n(rng);
            for (int i = 0; i < 3; ++i) {
                crf.start[i] = n(rng);
                crf.end[i] = n(rng);
            }
            crf.apply_constraints();
            double best = -std::numeric_limits<double>::infinity();
            const std::vector<Tag>* best_path = nullptr;
            std::vector<double> scores;
            for (const auto& p : paths) {
                const auto at = [](Tag t) { return static_cast<Eigen::Index>(t); };
                double s = crf.start[at(p.front())] + crf.end[at(p.back())];
                for (std::size_t t = 0; t < T; ++t) {
                    s += em(static_cast<Eigen::Index>(t), at(p[t]));
                    if (t > 0) s += crf.transitions(at(p[t - 1]), at(p[t]));
                }
                scores.push_back(s);
                if (s > best) {
                    best = s;
                    best_path = &p;
                }
            }
            double z = 0.0;
            for (double s : scores) z += std::exp(s - best);
            worst_z = std::max(worst_z, std::abs(crf_log_partition(em, crf) - (best + std::log(z))));
            viterbi_mismatch += viterbi_decode(em, crf) != *best_path;
        }
    }
    Outcome o;
    o.pass = worst_z < 1e-8 && viterbi_mismatch == 0;
    o.summary = "6000 instances, max |log Z err| " + fmt("%.2e", worst_z) + ", viterbi mismatches " +
                std::to_string(viterbi_mismatch);
    o.data = {{"instances", 6000}, {"max_log_partition_error", worst_z}, {"viterbi_mismatches", viterbi_mismatch}};
    return o;
}

Outcome gradients() {
    const auto merges = BpeModel::load(data_file("merges.txt"));
    const std::vector<std::pair<std::string, Tokenizer>> samples{
        {"a #FF573A car", Tokenizer::whitespace()},
        {"rgb(9, 80, 7)", Tokenizer::bpe(merges)},
        {"x #0A0B0C", Tokenizer::chars()},
        {"on rgb(1,2,3) and #ABCDEF", Tokenizer::whitespace()},
        {"#12AB9F tile", Tokenizer::bpe(merges)}};
    double cta_worst = 0.0;
    std::size_t cta_checked = 0, cta_kinks = 0;
    Json runs = Json::array();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ex = tagged(samples[seed - 1].first, samples[seed - 1].second);
        for (const bool training : {false, true}) {
            auto m = CtaModel::initialized(CtaConfig::toy(), seed);
            const DropoutContext ctx{training, seed, 0, 0};
            std::vector<double> grad(m.parameter_count(), 0.0), scratch(m.parameter_count());
            (void)loss_and_gradient(m, ex, grad, ctx);
            const auto loss = [&] { return loss_and_gradient(m, ex, scratch, ctx); };
            const auto pattern = [&] { return activation_pattern(m, ex.tokens); };
            const auto r = testing::check_gradient(m.parameters(), grad, loss, 1e-4, pattern);
            cta_worst = std::max(cta_worst, r.max_rel);
            cta_checked += r.checked;
            cta_kinks += r.kinks;
            runs.push_back({{"model", "cta"},
                            {"seed", seed},
                            {"scheme", ex.scheme},
                            {"dropout", training},
                            {"max_rel", r.max_rel},
                            {"worst", testing::owner(m, r.worst).name},
                            {"checked", r.checked},
                            {"kinks", r.kinks}});
        }
    }
    double book_worst = 0.0;
    std::size_t book_checked = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto book = seeded_book(20.0, 16);
        const auto task = make_surrogate_task(16, 64, seed);
        const auto pairs = sample_pairs(book, 32, seed);
        auto params = GeometryParams::random(16, seed);
        std::vector<double> emb(book.embeddings().begin(), book.embeddings().end());
        GeometryGradient g;
        (void)geometry_loss(book, emb, params, task, pairs, &g);
        const auto loss = [&] { return geometry_loss(book, emb, params, task, pairs, nullptr).total; };
        const auto re = testing::check_gradient(emb, g.embeddings, loss);
        const std::vector<double> psi_grad(g.psi.data(), g.psi.data() + g.psi.size());
        const auto rp = testing::check_gradient({params.psi.data(), static_cast<std::size_t>(params.psi.size())},
                                                psi_grad, loss);
        book_worst = std::max({book_worst, re.max_rel, rp.max_rel});
        book_checked += re.checked + rp.checked;
        runs.push_back({{"model", "colorbook"},
                        {"seed", seed},
                        {"max_rel_embeddings", re.max_rel},
                        {"max_rel_psi", rp.max_rel}});
    }
    Outcome o;
    o.pass = cta_worst < 1e-4 && book_worst < 1e-4 && cta_kinks * 20 < cta_checked;
    o.summary = "5 seeds, CTA max rel " + fmt("%.2e", cta_worst) + " (" + std::to_string(cta_checked) + " entries, " +
                std::to_string(cta_kinks) + " at activation kinks), ColorBook max rel " + fmt("%.2e", book_worst);
    o.data = {{"cta_max_rel", cta_worst},
              {"cta_checked", cta_checked},
              {"cta_kinks", cta_kinks},
              {"colorbook_max_rel", book_worst},
              {"colorbook_checked", book_checked},
              {"runs", runs}};
    return o;
}

Outcome tagger_end_to_end() {
    const auto t0 = Clock::now();
    const auto corpus = gen_tagger_corpus(2000, PhraseBank::load(data_file("phrases.txt")), three_schemes(), 7);
    auto m = CtaModel::initialized(CtaConfig::toy(), 7);
    TaggerTrainOptions opt;
    opt.epochs = 8;
    opt.batch_size = 16;
    opt.step.adam.lr = 3e-3;
    opt.step.seed = 7;
    const auto log = train_tagger(m, corpus.train, opt);
    const auto all = evaluate_tagger(m, corpus.valid);
    const double t = seconds_since(t0);
    Json per_scheme = Json::object();
    for (const auto& s : corpus.schemes) {
        std::vector<TaggedSequence> part;
        for (const auto& r : corpus.valid) {
            if (r.scheme == s) part.push_back(r);
        }
        per_scheme[s] = evaluate_tagger(m, part).f1();
    }
    const auto shared = corpus.manifest()["shared_colors"].get<std::size_t>();
    Outcome o;
    o.pass = all.f1() >= 0.99 && shared == 0 && t < 600.0;
    o.summary = "held-out F1 " + fmt("%.4f", all.f1()) + " over " + std::to_string(corpus.valid.size()) +
                " records, shared colors " + std::to_string(shared) + ", " + fmt("%.1f s", t);
    o.data = {{"prompts", 2000},
              {"train_records", corpus.train.size()},
              {"valid_records", corpus.valid.size()},
              {"epochs", opt.epochs},
              {"lr", opt.step.adam.lr},
              {"final_epoch_loss", log.back().mean_loss},
              {"precision", all.precision()},
              {"recall", all.recall()},
              {"f1", all.f1()},
              {"f1_by_scheme", per_scheme},
              {"shared_colors", shared},
              {"seconds", t}};
    return o;
}

Outcome geometry_effect() {
    const auto base = seeded_book(10.0, 16);
    const RowMatrix lab = anchor_matrix(base);
    Json runs = Json::array();
    double mean_geo = 0.0, mean_plain = 0.0;
    bool losses_close = true;
    ColorbookTrainOptions opt;
    opt.steps = 1500;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto task = make_surrogate_task(16, 16384, seed);
        const auto held_out = held_out_task(task, 4096, seed);
        double overlap[2], surr[2], train_surr[2];
        for (int variant = 0; variant < 2; ++variant) {
            auto book = base;
            auto params = GeometryParams::random(16, seed);
            params.lambda_d = variant == 0 ? 0.3 : 0.0;
            params.lambda_i = variant == 0 ? 0.2 : 0.0;
            opt.seed = seed;
            const auto log = train_colorbook(book, params, task, opt);
            overlap[variant] = knn_overlap(lab, embedding_matrix(book), 8);
            surr[variant] = surrogate_loss(book, held_out);
            train_surr[variant] = log.back().loss.surr;
        }
        mean_geo += overlap[0] / 3.0;
        mean_plain += overlap[1] / 3.0;
        const double gap = std::abs(surr[0] - surr[1]) / std::max(surr[0], surr[1]);
        losses_close = losses_close && gap <= 0.10;
        runs.push_back({{"seed", seed},
                        {"overlap_geometry", overlap[0]},
                        {"overlap_plain", overlap[1]},
                        {"held_out_surrogate_geometry", surr[0]},
                        {"held_out_surrogate_plain", surr[1]},
                        {"surrogate_gap", gap},
                        {"train_surrogate_geometry", train_surr[0]},
                        {"train_surrogate_plain", train_surr[1]}});
    }
    Outcome o;
    o.pass = mean_geo >= mean_plain && losses_close;
    o.summary = "3 seeds, mean kNN overlap " + fmt("%.4f", mean_geo) + " with geometry vs " + fmt("%.4f", mean_plain) +
                " without, held-out surrogate losses within 10%: " + (losses_close ? "yes" : "no");
    o.data = {{"spacing", base.spacing()},
              {"anchors", base.size()},
              {"steps", opt.steps},
              {"lr", opt.lr},
              {"train_samples", 16384},
              {"held_out_samples", 4096},
              {"dim", 16},
              {"initial_overlap", knn_overlap(lab, embedding_matrix(base), 8)},
              {"mean_overlap_geometry", mean_geo},
              {"mean_overlap_plain", mean_plain},
              {"runs", runs}};
    return o;
}

Outcome interpolation_contract() {
    const auto book = seeded_book(5.0, 16);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> L(0, 100), ab(-128, 128);
    std::vector<LabColor> queries;
    for (int i = 0; i < 10000; ++i) queries.push_back({L(rng), ab(rng), ab(rng)});
    double worst_sum = 0.0;
    for (const auto& r : query_batch(book, queries, book.k_default(), book.tau())) {
        double s = 0.0;
        for (double w : r.weights) s += w;
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    }
    ColorBook exact_book(book.anchors(), book.dim(), book.spacing(), book.tau(), 1);
    for (std::size_t i = 0; i < book.size(); ++i) {
        const std::vector<double> row(book.embedding(i).begin(), book.embedding(i).end());
        exact_book.set_embedding(i, row);
    }
    std::size_t exact_fail = 0;
    for (std::size_t i = 0; i < book.size(); i += 7) {
        const auto v = interpolate(exact_book, book.anchors()[i]);
        for (std::size_t j = 0; j < book.dim(); ++j) exact_fail += v[j] != static_cast<double>(book.embedding(i)[j]);
    }
    RowMatrix map(16, 3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < map.size(); ++i) map.data()[i] = n(rng);
    const PhiFn phi = [&map](const LabColor& c) -> Eigen::VectorXd { return map * Eigen::Vector3d(c.L, c.a, c.b); };
    std::vector<LabPair> pairs;
    for (int i = 0; i < 1000; ++i) pairs.push_back({queries[2 * i], queries[2 * i + 1]});
    const double interp = interpolation_loss(phi, pairs);
    Outcome o;
    o.pass = worst_sum <= 1e-12 && exact_fail == 0 && interp < 1e-20;
    o.summary = "max |sum w - 1| " + fmt("%.2e", worst_sum) + " over 10000 queries, exact-anchor mismatches " +
                std::to_string(exact_fail) + ", linear L_interp " + fmt("%.2e", interp);
    o.data = {{"max_weight_sum_error", worst_sum}, {"exact_anchor_mismatches", exact_fail}, {"linear_interp_loss", interp}};
    return o;
}

Outcome injection_arithmetic() {
    const auto book = seeded_book(5.0, 16);
    const auto corpus = gen_tagger_corpus(2000, PhraseBank::load(data_file("phrases.txt")), three_schemes(), 11);
    std::size_t prompts = 0, length_fail = 0, preserve_fail = 0, reference_fail = 0;
    for (const auto* split : {&corpus.train, &corpus.valid}) {
        for (const auto& rec : *split) {
            if (prompts >= 1000) break;
            const auto plan = plan_injection(rec.tokens, rec.tags, book);
            if (plan.ops.size() < 2) continue;
            ++prompts;
            const auto T = static_cast<Eigen::Index>(rec.tokens.size());
            RowMatrix seq(T, 16);
            for (Eigen::Index i = 0; i < seq.size(); ++i) seq.data()[i] = std::sin(0.37 * static_cast<double>(i)) * 100.0;
            const auto out = apply_plan(seq, plan);
            std::size_t removed = 0;
            for (const auto& op : plan.ops) removed += op.token_end - op.token_start - 1;
            length_fail += plan.final_len != plan.original_len - removed ||
                           static_cast<std::size_t>(out.rows()) != plan.final_len;

            // Index-remapping reference: walk the original rows left to right.
            std::vector<std::pair<std::size_t, std::size_t>> ranges;
            for (auto it = plan.ops.rbegin(); it != plan.ops.rend(); ++it) ranges.emplace_back(it->token_start, it->token_end);
            RowMatrix ref(static_cast<Eigen::Index>(plan.final_len), 16);
            Eigen::Index row = 0;
            std::size_t next = 0;
            for (Eigen::Index i = 0; i < T; ++i) {
                const auto u = static_cast<std::size_t>(i);
                if (next < ranges.size() && u == ranges[next].first) {
                    const auto& op = plan.ops[plan.ops.size() - 1 - next];
                    ref.row(row++) = Eigen::Map<const Eigen::RowVectorXd>(op.embedding.data(), 16);
                    i = static_cast<Eigen::Index>(ranges[next].second) - 1;
                    ++next;
                } else {
                    if (row < out.rows()) preserve_fail += !(out.row(row) == seq.row(i));
                    ref.row(row++) = seq.row(i);
                }
            }
            reference_fail += !(out.rows() == ref.rows() && out == ref);
        }
    }
    Outcome o;
    o.pass = prompts == 1000 && length_fail == 0 && preserve_fail == 0 && reference_fail == 0;
    o.summary = std::to_string(prompts) + " multi-color prompts, length errors " + std::to_string(length_fail) +
                ", altered rows " + std::to_string(preserve_fail) + ", reference mismatches " +
                std::to_string(reference_fail);
    o.data = {{"prompts", prompts},
              {"length_errors", length_fail},
              {"altered_rows", preserve_fail},
              {"reference_mismatches", reference_fail}};
    return o;
}

Outcome determinism() {
    const auto dir = fs::path(testing::temp_path("acceptance"));
    fs::create_directories(dir);
    const auto book = seeded_book(5.0, 16);
    const auto bytes = book.serialize();
    book.save((dir / "book.ncbk").string());
    const auto loaded = ColorBook::load((dir / "book.ncbk").string());
    const bool book_ok = loaded == book && loaded.serialize() == bytes;

    auto m = CtaModel::initialized(CtaConfig::toy(), 3);
    m.save((dir / "model.ncta").string());
    const auto ml = CtaModel::load((dir / "model.ncta").string());
    const bool model_ok = ml == m && ml.serialize() == m.serialize();

    const auto gen = [&](const char* out) {
        return run_cli("gen-corpus --n 100 --phrases " + data_file("phrases.txt") + " --merges " +
                       data_file("merges.txt") + " --seed 5 --out " + (dir / out).string());
    };
    bool corpus_ok = gen("c1") == 0 && gen("c2") == 0;
    for (const char* f : {"train.jsonl", "valid.jsonl", "manifest.json"}) {
        corpus_ok = corpus_ok && !slurp(dir / "c1" / f).empty() && slurp(dir / "c1" / f) == slurp(dir / "c2" / f);
    }
    const auto train = [&](const char* out) {
        return run_cli("train-tagger --train " + (dir / "c1" / "train.jsonl").string() + " --epochs 1 --seed 9 --out " +
                       (dir / out).string());
    };
    const bool tagger_ok = train("t1.ncta") == 0 && train("t2.ncta") == 0 &&
                           slurp(dir / "t1.ncta") == slurp(dir / "t2.ncta") && !slurp(dir / "t1.ncta").empty();
    Outcome o;
    o.pass = book_ok && model_ok && corpus_ok && tagger_ok;
    o.summary = std::string("codebook round trip ") + (book_ok ? "exact" : "differs") + ", checkpoint round trip " +
                (model_ok ? "exact" : "differs") + ", gen-corpus reruns " + (corpus_ok ? "identical" : "differ") +
                ", train-tagger reruns " + (tagger_ok ? "identical" : "differ");
    o.data = {{"codebook_round_trip", book_ok},
              {"checkpoint_round_trip", model_ok},
              {"gen_corpus_identical", corpus_ok},
              {"train_tagger_identical", tagger_ok}};
    return o;
}

Outcome non_reproducibility_statement() {
    const auto readme = slurp(fs::path(NUMCOLOR_SOURCE_DIR) / "README.md");
    std::vector<std::string> missing;
    for (const char* needle : {"55.71", "44.73", "0.998", "15.68%", "harmony", "not reproduced"}) {
        if (readme.find(needle) == std::string::npos) missing.emplace_back(needle);
    }
    Outcome o;
    o.pass = !readme.empty() && missing.empty();
    o.summary = missing.empty() ? "README states the out-of-scope figures" : "README lacks " + Json(missing).dump();
    o.data = {{"missing", missing}};
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    parallel::configure_from_env();
    CLI::App app{"Acceptance criteria"};
    std::string report = "acceptance_report.json";
    std::vector<std::string> only;
    app.add_option("--report", report, "JSON report path");
    app.add_option("--only", only, "Criterion ids to run (default: all)");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{
        {"AC1", "anchor grid calibration", anchor_grid},
        {"AC2", "CIEDE2000 reference pairs", ciede2000},
        {"AC3", "sRGB/Lab round trip", round_trip},
        {"AC4", "CRF exhaustive oracle", crf_oracle},
        {"AC5", "gradient fidelity", gradients},
        {"AC6", "tagger end to end", tagger_end_to_end},
        {"AC7", "geometry effect", geometry_effect},
        {"AC8", "interpolation contract", interpolation_contract},
        {"AC9", "injection arithmetic", injection_arithmetic},
        {"AC10", "determinism and serialization", determinism},
        {"AC11", "non-reproducibility statement", non_reproducibility_statement},
    };

    Json out = Json::object();
    bool all = true;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.summary = std::string("exception: ") + e.what();
        }
        const double t = seconds_since(t0);
        all = all && o.pass;
        std::cout << c.id << " " << (o.pass ? "PASS" : "FAIL") << "  " << c.title << ": " << o.summary << std::endl;
        out[c.id] = {{"title", c.title}, {"pass", o.pass}, {"summary", o.summary}, {"seconds", t}, {"data", o.data}};
    }
    std::ofstream(report) << out.dump(2) << "\n";
    return all ? 0 : 1;
}
