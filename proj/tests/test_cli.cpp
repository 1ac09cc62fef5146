#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int status = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(NUMCOLOR_CLI) + " " + args + " 2>&1";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int st = pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

json run_json(const std::string& args) {
    const auto r = run(args + " --json");
    INFO(r.out);
    REQUIRE(r.status == 0);
    return json::parse(r.out);
}

std::string data(const char* f) { return std::string(std::getenv("NUMCOLOR_DATA_DIR")) + "/" + f; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const fs::path& seeded_book() {
    static const fs::path path = [] {
        const fs::path p = numcolor::testing::temp_path("cli-book.ncbk");
        const auto r = run("build-codebook --spacing 5 --dim 16 --names " + data("css_colors.tsv") + " --vectors " +
                           data("name_vectors_d16.tsv") + " --out " + p.string());
        REQUIRE(r.status == 0);
        return p;
    }();
    return path;
}

}  // namespace

TEST_CASE("build-codebook prints K") {
    seeded_book();
    const fs::path p = numcolor::testing::temp_path("cli-random.ncbk");
    const auto j = run_json("build-codebook --spacing 5 --dim 16 --seed 3 --out " + p.string());
    CHECK(j["K"] == 6574);
    CHECK(j["grid"]["origin"] == json::array({0, 0, 0}));
    const auto t = run("build-codebook --spacing 5 --dim 16 --seed 3 --out " + p.string());
    CHECK(t.out.find("6574") != std::string::npos);
    CHECK(run("build-codebook --spacing 0 --out " + p.string()).status != 0);
    CHECK(run("build-codebook --spacing 5 --names " + data("css_colors.tsv") + " --out " + p.string()).status != 0);
}

TEST_CASE("lookup at an anchor with k=1 has weight 1") {
    const auto j = run_json("lookup --book " + seeded_book().string() + " --color \"#000000\" --k 1");
    REQUIRE(j["neighbors"].size() == 1);
    CHECK(j["neighbors"][0]["weight"] == 1.0);
    CHECK(j["neighbors"][0]["distance"] == 0.0);
    CHECK(j["embedding_digest"].get<std::string>().size() == 16);
    const auto d = run_json("lookup --book " + seeded_book().string() + " --color \"rgb(255, 87, 51)\"");
    CHECK(d["k"] == 8);
    double sum = 0;
    for (const auto& n : d["neighbors"]) sum += n["weight"].get<double>();
    CHECK(std::abs(sum - 1.0) < 1e-12);
    const auto bad = run("lookup --book " + seeded_book().string() + " --color \"#GG0000\"");
    CHECK(bad.status != 0);
    CHECK(bad.out.rfind("error: ", 0) == 0);
    CHECK(run("lookup --book /nonexistent.ncbk --color \"#000000\"").status != 0);
}

TEST_CASE("detect finds one span") {
    const auto j = run_json("detect --scheme bpe --merges " + data("merges.txt") + " --text \"a #FF5733 car\"");
    REQUIRE(j["spans"].size() == 1);
    CHECK(j["spans"][0]["start"] == 2);
    CHECK(j["spans"][0]["end"] == 9);
    CHECK(j["spans"][0]["rgb"] == json::array({255, 87, 51}));
    for (const char* s : {"whitespace", "chars"}) {
        const auto k = run_json(std::string("detect --scheme ") + s + " --text \"a #FF5733 car\"");
        CHECK(k["spans"].size() == 1);
    }
    CHECK(run("detect --scheme nope --text x").status != 0);
    CHECK(run("detect --scheme bpe --text x").status != 0);
}

TEST_CASE("analyze a book against itself") {
    const auto b = seeded_book().string();
    const auto j = run_json("analyze --book-a " + b + " --book-b " + b);
    CHECK(std::abs(j["cka"].get<double>() - 1.0) < 1e-12);
    CHECK(j["knn_overlap"]["embeddings"] == 1.0);
    CHECK(j["drift"]["l2"]["mean"] == 0.0);
    CHECK(j["drift"]["cosine"]["mean"] == 1.0);
}

TEST_CASE("plan-injection") {
    const auto j = run_json("plan-injection --book " + seeded_book().string() +
                            " --scheme chars --text \"a #FF5733 car and rgb(1, 2, 3)\"");
    CHECK(j["plan"]["ops"].size() == 2);
    CHECK(j["plan"]["ops"][0]["token_start"].get<int>() > j["plan"]["ops"][1]["token_start"].get<int>());
}

TEST_CASE("corpus, tagger and colorbook pipeline is reproducible") {
    const fs::path d1 = numcolor::testing::temp_path("cli-corpus-1");
    const fs::path d2 = numcolor::testing::temp_path("cli-corpus-2");
    const auto gen = [&](const fs::path& d) {
        return run_json("gen-corpus --n 50 --phrases " + data("phrases.txt") + " --merges " + data("merges.txt") +
                        " --seed 4 --out " + d.string());
    };
    const auto m1 = gen(d1);
    (void)gen(d2);
    CHECK(m1["buckets"] == json::array({10, 10, 10, 10, 10}));
    for (const char* f : {"train.jsonl", "valid.jsonl", "manifest.json"}) CHECK(slurp(d1 / f) == slurp(d2 / f));
    CHECK(run("gen-corpus --n 7 --phrases " + data("phrases.txt") + " --seed 1 --out " + d1.string()).status != 0);
    CHECK(run("gen-corpus --phrases " + data("phrases.txt") + " --out " + d1.string()).status != 0);

    const auto train = (d1 / "train.jsonl").string();
    const fs::path ck1 = numcolor::testing::temp_path("cli-tagger-1.ncta");
    const fs::path ck2 = numcolor::testing::temp_path("cli-tagger-2.ncta");
    const fs::path log = numcolor::testing::temp_path("cli-tagger.csv");
    const auto t = run_json("train-tagger --train " + train + " --epochs 1 --seed 5 --out " + ck1.string() +
                            " --log " + log.string());
    (void)run_json("train-tagger --train " + train + " --epochs 1 --seed 5 --out " + ck2.string());
    CHECK(slurp(ck1) == slurp(ck2));
    CHECK(slurp(log).rfind("epoch,loss\n", 0) == 0);
    CHECK(t.contains("out"));

    const auto e = run_json("eval-tagger --model " + ck1.string() + " --data " + (d1 / "valid.jsonl").string());
    CHECK(e["f1"].get<double>() >= 0.0);
    CHECK(e["f1"].get<double>() <= 1.0);
    CHECK(run("detect --scheme chars --model " + ck1.string() + " --text \"a #FF5733 car\"").status == 0);

    const fs::path cb = numcolor::testing::temp_path("cli-trained.ncbk");
    const fs::path clog = numcolor::testing::temp_path("cli-colorbook.csv");
    const auto tr = run_json("train-colorbook --book " + seeded_book().string() + " --out " + cb.string() +
                             " --steps 3 --seed 6 --log " + clog.string());
    CHECK(tr["steps"] == 3);
    CHECK(slurp(clog).rfind("step,total,surr,dir,interp\n", 0) == 0);
    const auto a = run_json("analyze --book-a " + seeded_book().string() + " --book-b " + cb.string());
    CHECK(a["drift"]["l2"]["mean"].get<double>() > 0.0);
    CHECK(run("train-colorbook --book " + seeded_book().string() + " --out " + cb.string()).status != 0);
}

TEST_CASE("unknown subcommands fail") {
    CHECK(run("frobnicate").status != 0);
    CHECK(run("").status != 0);
}
