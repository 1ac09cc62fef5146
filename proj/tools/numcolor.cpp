#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "numcolor/codebook.hpp"
#include "numcolor/colorspace.hpp"
#include "numcolor/corpus.hpp"
#include "numcolor/cta.hpp"
#include "numcolor/detail/random.hpp"
#include "numcolor/error.hpp"
#include "numcolor/geometry.hpp"
#include "numcolor/injection.hpp"
#include "numcolor/metrics.hpp"
#include "numcolor/parallel.hpp"
#include "numcolor/span_detector.hpp"
#include "numcolor/tokenizers.hpp"

using namespace numcolor;
using Json = nlohmann::ordered_json;

namespace {

void emit(const Json& j) { std::cout << j.dump(2) << '\n'; }

Json lab_json(const LabColor& c) { return Json::array({c.L, c.a, c.b}); }
Json rgb_json(const Rgb8& c) { return Json::array({c.r, c.g, c.b}); }

Json span_json(const ColorSpan& s) {
    Json j;
    j["start"] = s.start;
    j["end"] = s.end;
    j["format"] = std::string(to_string(s.format));
    j["rgb"] = rgb_json(s.parsed);
    j["lab"] = lab_json(s.lab);
    return j;
}

Tokenizer make_tokenizer(const std::string& scheme, const std::string& merges) {
    if (scheme == "whitespace") return Tokenizer::whitespace();
    if (scheme == "chars") return Tokenizer::chars();
    if (scheme == "bpe") {
        if (merges.empty()) throw Error("scheme bpe needs --merges");
        return Tokenizer::bpe(BpeModel::load(merges));
    }
    throw Error("unknown scheme '" + scheme + "' (expected whitespace, chars or bpe)");
}

LabColor parse_query_color(const std::string& text) {
    const auto parsed = parse_color(text);
    if (!parsed) throw Error("not a color literal: " + text);
    return srgb_to_lab(parsed->rgb);
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    os << body;
    if (!os) throw Error("write failed: " + path);
}

/// Tags for a tokenized text, from the model when given, else the detector.
struct Tagging {
    std::vector<Tag> tags;
    std::size_t boundary_warnings = 0;
    std::string source;
};

Tagging tag_text(const std::string& text, const std::vector<Token>& tokens, const std::string& model_path) {
    Tagging t;
    if (!model_path.empty()) {
        const auto model = CtaModel::load(model_path);
        t.tags = viterbi_decode(model, forward(model, tokens));
        t.source = "model";
    } else {
        auto bio = spans_to_bio(tokens, find_color_spans(text));
        t.tags = std::move(bio.tags);
        t.boundary_warnings = bio.boundary_warnings;
        t.source = "detector";
    }
    return t;
}

// ---- build-codebook ---------------------------------------------------------

struct BuildCodebookArgs {
    double spacing = 5.0;
    std::size_t dim = 16;
    std::string names;
    std::string vectors;
    double tau = ColorBook::kDefaultTau;
    std::size_t k = ColorBook::kDefaultK;
    std::uint64_t seed = 0;
    double init_scale = 0.02;
    std::string out;
    bool json = false;
};

void run_build_codebook(const BuildCodebookArgs& a) {
    if (a.names.empty() != a.vectors.empty()) throw Error("--names and --vectors must be given together");
    ColorBook book(build_anchor_grid(a.spacing), a.dim, a.spacing, a.tau, a.k);
    std::size_t seeded = 0;
    if (!a.names.empty()) {
        const auto table = NamedColorTable::load(a.names);
        const auto vectors = load_name_vectors(a.vectors);
        const auto ids = seed_from_names(book, table, vectors);
        propagate_init(book, ids);
        seeded = ids.size();
    } else {
        detail::Rng rng(a.seed);
        std::vector<double> row(a.dim);
        for (std::size_t i = 0; i < book.size(); ++i) {
            for (auto& v : row) v = a.init_scale * rng.normal();
            book.set_embedding(i, row);
        }
    }
    book.save(a.out);
    if (a.json) {
        Json j;
        j["K"] = book.size();
        j["dim"] = book.dim();
        j["spacing"] = a.spacing;
        j["grid"] = {{"origin", Json::array({0.0, 0.0, 0.0})},
                     {"L", Json::array({0.0, 100.0})},
                     {"a", Json::array({-130.0, 130.0})},
                     {"b", Json::array({-130.0, 130.0})},
                     {"order", "L-major, then a, then b"}};
        j["tau"] = a.tau;
        j["k"] = a.k;
        j["init"] = a.names.empty() ? "random" : "names";
        j["seeded_anchors"] = seeded;
        j["out"] = a.out;
        emit(j);
    } else {
        std::cout << book.size() << '\n';
    }
}

// ---- lookup --------------------------------------------------------------------

struct LookupArgs {
    std::string book;
    std::string color;
    std::optional<std::size_t> k;
    std::optional<double> tau;
    bool json = false;
};

void run_lookup(const LookupArgs& a) {
    const auto book = ColorBook::load(a.book);
    const LabColor lab = parse_query_color(a.color);
    const std::size_t k = a.k.value_or(book.k_default());
    const double tau = a.tau.value_or(book.tau());
    if (k < 1 || k > book.size()) throw Error("--k must be in [1, K]");
    if (!(tau > 0.0)) throw Error("--tau must be > 0");
    const auto r = query(book, lab, k, tau);
    std::vector<double> emb(book.dim(), 0.0);
    for (std::size_t j = 0; j < r.indices.size(); ++j) {
        const auto row = book.embedding(r.indices[j]);
        for (std::size_t d = 0; d < emb.size(); ++d) emb[d] += r.weights[j] * static_cast<double>(row[d]);
    }
    if (a.json) {
        Json j;
        j["color"] = a.color;
        j["lab"] = lab_json(lab);
        j["k"] = k;
        j["tau"] = tau;
        auto ns = Json::array();
        for (std::size_t i = 0; i < r.indices.size(); ++i) {
            ns.push_back({{"index", r.indices[i]},
                          {"lab", lab_json(book.anchors()[r.indices[i]])},
                          {"distance", r.distances[i]},
                          {"weight", r.weights[i]}});
        }
        j["neighbors"] = ns;
        j["embedding_digest"] = embedding_digest(emb);
        emit(j);
    } else {
        for (std::size_t i = 0; i < r.indices.size(); ++i) {
            std::printf("%u\t%.6f\t%.6f\n", r.indices[i], r.distances[i], r.weights[i]);
        }
        std::cout << "digest " << embedding_digest(emb) << '\n';
    }
}

// ---- detect ----------------------------------------------------------------------

struct DetectArgs {
    std::string scheme = "whitespace";
    std::string merges;
    std::string text;
    std::string model;
    bool json = false;
};

void run_detect(const DetectArgs& a) {
    const auto tokens = make_tokenizer(a.scheme, a.merges)(a.text);
    const auto tagging = tag_text(a.text, tokens, a.model);
    const auto groups = parse_tag_groups(tokens, tagging.tags);
    if (a.json) {
        Json j;
        j["scheme"] = a.scheme;
        j["text"] = a.text;
        j["source"] = tagging.source;
        auto toks = Json::array();
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            toks.push_back({{"surface", tokens[i].surface},
                            {"start", tokens[i].start},
                            {"end", tokens[i].end},
                            {"tag", std::string(1, tag_char(tagging.tags[i]))}});
        }
        j["tokens"] = toks;
        auto spans = Json::array();
        for (std::size_t i = 0; i < groups.spans.size(); ++i) {
            Json s = span_json(groups.spans[i]);
            s["tokens"] = Json::array({groups.token_ranges[i].first, groups.token_ranges[i].second});
            spans.push_back(s);
        }
        j["spans"] = spans;
        j["dropped_groups"] = groups.dropped;
        j["boundary_warnings"] = tagging.boundary_warnings;
        emit(j);
    } else {
        for (const auto& s : groups.spans) {
            std::printf("%zu\t%zu\t%s\t%s\n", s.start, s.end, std::string(to_string(s.format)).c_str(),
                        format_color(s.parsed, ColorFormat::hex).c_str());
        }
    }
}

// ---- gen-corpus -----------------------------------------------------------------

struct GenCorpusArgs {
    std::size_t n = 2000;
    std::string phrases;
    std::string merges;
    std::vector<std::string> schemes{"whitespace", "chars", "bpe"};
    std::uint64_t seed = 0;
    std::string out;
    bool json = false;
};

void run_gen_corpus(const GenCorpusArgs& a) {
    const auto bank = PhraseBank::load(a.phrases);
    std::vector<Tokenizer> schemes;
    for (const auto& s : a.schemes) schemes.push_back(make_tokenizer(s, a.merges));
    const auto corpus = gen_tagger_corpus(a.n, bank, schemes, a.seed);
    std::filesystem::create_directories(a.out);
    write_corpus(a.out, corpus);
    const auto m = corpus.manifest();
    if (a.json) {
        emit(m);
    } else {
        std::cout << "train " << corpus.train.size() << " records, valid " << corpus.valid.size()
                  << " records -> " << a.out << '\n';
    }
}

// ---- train-tagger / eval-tagger -------------------------------------------------

struct TrainTaggerArgs {
    std::string train;
    std::string config = "toy";
    std::size_t epochs = 8;
    std::size_t batch = 16;
    double lr = 3e-3;
    double weight_decay = 0.01;
    std::uint64_t seed = 0;
    std::string out;
    std::string log;
    bool json = false;
};

void run_train_tagger(const TrainTaggerArgs& a) {
    CtaConfig cfg;
    if (a.config == "toy") {
        cfg = CtaConfig::toy();
    } else if (a.config != "default") {
        throw Error("--config must be toy or default");
    }
    const auto data = read_jsonl(a.train);
    if (data.empty()) throw Error("no training records in " + a.train);
    auto model = CtaModel::initialized(cfg, a.seed);
    TaggerTrainOptions opt;
    opt.epochs = a.epochs;
    opt.batch_size = a.batch;
    opt.step.adam.lr = a.lr;
    opt.step.adam.weight_decay = a.weight_decay;
    opt.step.seed = a.seed;
    const auto log = train_tagger(model, data, opt);
    model.save(a.out);
    if (!a.log.empty()) {
        std::ostringstream os;
        os.precision(17);
        os << "epoch,loss\n";
        for (const auto& e : log) os << e.epoch << ',' << e.mean_loss << '\n';
        write_text(a.log, os.str());
    }
    if (a.json) {
        Json j;
        j["records"] = data.size();
        j["config"] = a.config;
        j["parameters"] = model.parameter_count();
        auto ep = Json::array();
        for (const auto& e : log) ep.push_back({{"epoch", e.epoch}, {"loss", e.mean_loss}});
        j["epochs"] = ep;
        j["out"] = a.out;
        emit(j);
    } else {
        for (const auto& e : log) std::printf("epoch %zu loss %.6f\n", e.epoch, e.mean_loss);
    }
}

struct EvalTaggerArgs {
    std::string model;
    std::string data;
    bool json = false;
};

void run_eval_tagger(const EvalTaggerArgs& a) {
    const auto model = CtaModel::load(a.model);
    const auto data = read_jsonl(a.data);
    const auto s = evaluate_tagger(model, data);
    if (a.json) {
        Json j;
        j["records"] = data.size();
        j["true_positives"] = s.true_positives;
        j["false_positives"] = s.false_positives;
        j["false_negatives"] = s.false_negatives;
        j["dropped_groups"] = s.dropped_groups;
        j["precision"] = s.precision();
        j["recall"] = s.recall();
        j["f1"] = s.f1();
        emit(j);
    } else {
        std::printf("precision %.6f recall %.6f f1 %.6f\n", s.precision(), s.recall(), s.f1());
    }
}

// ---- train-colorbook ------------------------------------------------------------

struct TrainColorbookArgs {
    std::string book;
    std::string out;
    std::size_t steps = 200;
    double lr = 1e-2;
    double weight_decay = 0.01;
    std::size_t pairs = 128;
    std::size_t samples = 512;
    double lambda_d = 0.3;
    double lambda_i = 0.2;
    std::uint64_t seed = 0;
    std::string log;
    bool json = false;
};

void run_train_colorbook(const TrainColorbookArgs& a) {
    auto book = ColorBook::load(a.book);
    const auto task = make_surrogate_task(book.dim(), a.samples, a.seed);
    auto params = GeometryParams::random(book.dim(), a.seed);
    params.lambda_d = a.lambda_d;
    params.lambda_i = a.lambda_i;
    ColorbookTrainOptions opt;
    opt.steps = a.steps;
    opt.lr = a.lr;
    opt.weight_decay = a.weight_decay;
    opt.pairs_per_step = a.pairs;
    opt.seed = a.seed;
    const auto log = train_colorbook(book, params, task, opt);
    book.save(a.out);
    if (!a.log.empty()) {
        std::ostringstream os;
        write_training_log(os, log);
        write_text(a.log, os.str());
    }
    const LossBreakdown last = log.empty() ? LossBreakdown{} : log.back().loss;
    if (a.json) {
        Json j;
        j["steps"] = a.steps;
        j["lambda_d"] = a.lambda_d;
        j["lambda_i"] = a.lambda_i;
        j["final"] = {{"total", last.total}, {"surr", last.surr}, {"dir", last.dir}, {"interp", last.interp}};
        j["out"] = a.out;
        emit(j);
    } else {
        std::printf("total %.6f surr %.6f dir %.6f interp %.6f\n", last.total, last.surr, last.dir, last.interp);
    }
}

// ---- analyze ------------------------------------------------------------------------

struct AnalyzeArgs {
    std::string book_a;
    std::string book_b;
    std::size_t k = 8;
    bool per_row = false;
    bool json = false;
};

void run_analyze(const AnalyzeArgs& a) {
    const auto A = ColorBook::load(a.book_a);
    const auto B = ColorBook::load(a.book_b);
    if (A.anchors() != B.anchors()) throw Error("books do not share the same anchors");
    if (A.dim() != B.dim()) throw Error("books have different embedding widths");
    const RowMatrix EA = embedding_matrix(A);
    const RowMatrix EB = embedding_matrix(B);
    const RowMatrix lab = anchor_matrix(A);
    const double cka = linear_cka(EA, EB);
    const double overlap = knn_overlap(EA, EB, a.k);
    const double lab_a = knn_overlap(lab, EA, a.k);
    const double lab_b = knn_overlap(lab, EB, a.k);
    const auto drift = drift_report(EA, EB);
    if (a.json) {
        Json j;
        j["K"] = A.size();
        j["dim"] = A.dim();
        j["cka"] = cka;
        j["knn_overlap"] = {{"k", a.k}, {"embeddings", overlap}, {"lab_vs_a", lab_a}, {"lab_vs_b", lab_b}};
        j["drift"] = drift.to_json(a.per_row);
        emit(j);
    } else {
        std::printf("cka %.6f\nknn_overlap %.6f\nlab_overlap_a %.6f\nlab_overlap_b %.6f\n", cka, overlap, lab_a,
                    lab_b);
        std::printf("drift_l2_mean %.6g\ndrift_cosine_mean %.6f\n", drift.l2_summary.mean, drift.cosine_summary.mean);
    }
}

// ---- plan-injection -------------------------------------------------------------

struct PlanInjectionArgs {
    std::string book;
    std::string scheme = "whitespace";
    std::string merges;
    std::string text;
    std::string model;
    bool json = false;
};

void run_plan_injection(const PlanInjectionArgs& a) {
    const auto book = ColorBook::load(a.book);
    const auto tokens = make_tokenizer(a.scheme, a.merges)(a.text);
    const auto tagging = tag_text(a.text, tokens, a.model);
    const auto plan = plan_injection(tokens, tagging.tags, book);
    if (a.json) {
        Json j;
        j["scheme"] = a.scheme;
        j["text"] = a.text;
        j["source"] = tagging.source;
        j["plan"] = plan.to_json();
        emit(j);
    } else {
        std::printf("original_len %zu final_len %zu ops %zu dropped %zu\n", plan.original_len, plan.final_len,
                    plan.ops.size(), plan.dropped);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numeric color detection, codebook and injection tools"};
    app.require_subcommand(1);

    BuildCodebookArgs bc;
    auto* c_bc = app.add_subcommand("build-codebook", "Build a Lab anchor codebook");
    c_bc->add_option("--spacing", bc.spacing, "Grid spacing in Lab units")->check(CLI::PositiveNumber);
    c_bc->add_option("--dim", bc.dim, "Embedding width")->check(CLI::PositiveNumber);
    c_bc->add_option("--names", bc.names, "Named color table (name, L, a, b)");
    c_bc->add_option("--vectors", bc.vectors, "Name vectors (name, v0, v1, ...)");
    c_bc->add_option("--tau", bc.tau, "Interpolation temperature");
    c_bc->add_option("--k", bc.k, "Interpolation neighbors");
    c_bc->add_option("--seed", bc.seed, "Seed for random embeddings when no names are given");
    c_bc->add_option("--init-scale", bc.init_scale, "Standard deviation of random embeddings");
    c_bc->add_option("--out", bc.out, "Output codebook")->required();
    c_bc->add_flag("--json", bc.json);
    c_bc->callback([&] { run_build_codebook(bc); });

    LookupArgs lk;
    auto* c_lk = app.add_subcommand("lookup", "Soft kNN lookup of one color");
    c_lk->add_option("--book", lk.book)->required();
    c_lk->add_option("--color", lk.color, "#RRGGBB or rgb(r, g, b)")->required();
    c_lk->add_option("--k", lk.k);
    c_lk->add_option("--tau", lk.tau);
    c_lk->add_flag("--json", lk.json);
    c_lk->callback([&] { run_lookup(lk); });

    DetectArgs dt;
    auto* c_dt = app.add_subcommand("detect", "Find color spans in a prompt");
    c_dt->add_option("--scheme", dt.scheme, "whitespace, chars or bpe");
    c_dt->add_option("--merges", dt.merges, "BPE merges file");
    c_dt->add_option("--text", dt.text)->required();
    c_dt->add_option("--model", dt.model, "Tagger checkpoint; the rule-based detector is used when omitted");
    c_dt->add_flag("--json", dt.json);
    c_dt->callback([&] { run_detect(dt); });

    GenCorpusArgs gc;
    auto* c_gc = app.add_subcommand("gen-corpus", "Generate a tagged training corpus");
    c_gc->add_option("--n", gc.n, "Number of prompts (multiple of 5)");
    c_gc->add_option("--phrases", gc.phrases)->required();
    c_gc->add_option("--merges", gc.merges);
    c_gc->add_option("--schemes", gc.schemes)->delimiter(',');
    c_gc->add_option("--seed", gc.seed)->required();
    c_gc->add_option("--out", gc.out, "Output directory")->required();
    c_gc->add_flag("--json", gc.json);
    c_gc->callback([&] { run_gen_corpus(gc); });

    TrainTaggerArgs tt;
    auto* c_tt = app.add_subcommand("train-tagger", "Train the span tagger");
    c_tt->add_option("--train", tt.train, "Training JSONL")->required();
    c_tt->add_option("--config", tt.config, "toy or default");
    c_tt->add_option("--epochs", tt.epochs);
    c_tt->add_option("--batch", tt.batch)->check(CLI::PositiveNumber);
    c_tt->add_option("--lr", tt.lr);
    c_tt->add_option("--weight-decay", tt.weight_decay);
    c_tt->add_option("--seed", tt.seed)->required();
    c_tt->add_option("--out", tt.out, "Output checkpoint")->required();
    c_tt->add_option("--log", tt.log, "Per-epoch CSV log");
    c_tt->add_flag("--json", tt.json);
    c_tt->callback([&] { run_train_tagger(tt); });

    EvalTaggerArgs et;
    auto* c_et = app.add_subcommand("eval-tagger", "Span-level scores against the rule-based detector");
    c_et->add_option("--model", et.model)->required();
    c_et->add_option("--data", et.data, "JSONL records")->required();
    c_et->add_flag("--json", et.json);
    c_et->callback([&] { run_eval_tagger(et); });

    TrainColorbookArgs tc;
    auto* c_tc = app.add_subcommand("train-colorbook", "Train codebook embeddings with geometry losses");
    c_tc->add_option("--book", tc.book)->required();
    c_tc->add_option("--out", tc.out)->required();
    c_tc->add_option("--steps", tc.steps);
    c_tc->add_option("--lr", tc.lr);
    c_tc->add_option("--weight-decay", tc.weight_decay);
    c_tc->add_option("--pairs", tc.pairs, "Anchor pairs per step")->check(CLI::PositiveNumber);
    c_tc->add_option("--samples", tc.samples, "Surrogate task size")->check(CLI::PositiveNumber);
    c_tc->add_option("--lambda-d", tc.lambda_d);
    c_tc->add_option("--lambda-i", tc.lambda_i);
    c_tc->add_option("--seed", tc.seed)->required();
    c_tc->add_option("--log", tc.log, "CSV log");
    c_tc->add_flag("--json", tc.json);
    c_tc->callback([&] { run_train_colorbook(tc); });

    AnalyzeArgs an;
    auto* c_an = app.add_subcommand("analyze", "Compare two codebooks over the same anchors");
    c_an->add_option("--book-a", an.book_a)->required();
    c_an->add_option("--book-b", an.book_b)->required();
    c_an->add_option("--k", an.k)->check(CLI::PositiveNumber);
    c_an->add_flag("--per-row", an.per_row, "Include per-anchor drift");
    c_an->add_flag("--json", an.json);
    c_an->callback([&] { run_analyze(an); });

    PlanInjectionArgs pi;
    auto* c_pi = app.add_subcommand("plan-injection", "Plan embedding replacement for a prompt");
    c_pi->add_option("--book", pi.book)->required();
    c_pi->add_option("--scheme", pi.scheme);
    c_pi->add_option("--merges", pi.merges);
    c_pi->add_option("--text", pi.text)->required();
    c_pi->add_option("--model", pi.model);
    c_pi->add_flag("--json", pi.json);
    c_pi->callback([&] { run_plan_injection(pi); });

    try {
        parallel::configure_from_env();
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
