#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "helpers.hpp"
#include "mtx/mtx.hpp"

namespace fs = std::filesystem;
using namespace mtx;

namespace {

struct CliResult {
    int status = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Runs the installed binary with redirected streams; each call gets fresh
// capture files so results never bleed between assertions.
CliResult run_cli(const std::string& args, const fs::path& dir) {
    static int counter = 0;
    const char* bin = std::getenv("MTX_BIN");
    REQUIRE(bin != nullptr);
    const fs::path out = dir / ("stdout." + std::to_string(counter) + ".txt");
    const fs::path err = dir / ("stderr." + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd =
        std::string(bin) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

Image write_png(const fs::path& p, int h, int w, uint64_t seed) {
    const Image img = testutil::random_image<float>(h, w, seed);
    save_image(img, p);
    return load_image(p);  // PNGs quantize; return what the CLI will see
}

}  // namespace

TEST_CASE("cli rejects missing and malformed invocations") {
    testutil::TempDir td("cli");
    auto none = run_cli("", td.path());
    CHECK(none.status != 0);
    CHECK(none.err.find("error") != std::string::npos);

    auto missing = run_cli("train-mdan --iterations 1", td.path());
    CHECK(missing.status != 0);
    CHECK(missing.err.find("error") != std::string::npos);

    auto unknown = run_cli("frobnicate", td.path());
    CHECK(unknown.status != 0);
}

TEST_CASE("train-mdan with zero iterations copies the guided content") {
    testutil::TempDir td("cli");
    write_png(td.path() / "texture.png", 16, 16, 1);
    const Image content = write_png(td.path() / "content.png", 16, 16, 2);
    const fs::path out = td.path() / "out.png";

    auto r = run_cli("train-mdan --texture " + (td.path() / "texture.png").string() +
                         " --content " + (td.path() / "content.png").string() + " --patch-k 2" +
                         " --iterations 0 --out " + out.string(),
                     td.path());
    REQUIRE(r.status == 0);
    REQUIRE(fs::exists(out));

    const Image got = load_image(out);
    REQUIRE(got.height() == 16);
    REQUIRE(got.width() == 16);
    CHECK(testutil::max_abs_diff(got.px, content.px) == 0.0f);

    // Every run leaves a manifest next to its output.
    REQUIRE(fs::exists(td.path() / "out.png.json"));
    const auto manifest = nlohmann::json::parse(slurp(td.path() / "out.png.json"));
    CHECK(manifest["iterations"] == 0);
    CHECK(manifest["out"] == out.string());
}

TEST_CASE("train-mdan is reproducible for a fixed seed") {
    testutil::TempDir td("cli");
    write_png(td.path() / "texture.png", 16, 16, 3);
    const std::string common = "train-mdan --texture " + (td.path() / "texture.png").string() +
                               " --patch-k 2 --iterations 2 --d-channels 8";

    auto a = run_cli("--seed 7 " + common + " --out " + (td.path() / "a.png").string(), td.path());
    auto b = run_cli(common + " --seed 7 --out " + (td.path() / "b.png").string(), td.path());
    REQUIRE(a.status == 0);
    REQUIRE(b.status == 0);
    CHECK(testutil::bitwise_equal(td.path() / "a.png", td.path() / "b.png"));

    auto c = run_cli(common + " --seed 8 --out " + (td.path() / "c.png").string(), td.path());
    REQUIRE(c.status == 0);
    CHECK(!testutil::bitwise_equal(td.path() / "a.png", td.path() / "c.png"));
}

TEST_CASE("train-mdan config file fills defaults and flags override it") {
    testutil::TempDir td("cli");
    write_png(td.path() / "texture.png", 16, 16, 4);
    {
        std::ofstream cfg(td.path() / "run.ini");
        cfg << "iterations=2\npatch-k=2\nd-channels=8\n";
    }
    const std::string base = "train-mdan --texture " + (td.path() / "texture.png").string() +
                             " --config " + (td.path() / "run.ini").string();

    auto file_only = run_cli(base + " --out " + (td.path() / "f.png").string(), td.path());
    REQUIRE(file_only.status == 0);
    auto mf = nlohmann::json::parse(slurp(td.path() / "f.png.json"));
    CHECK(mf["iterations"] == 2);

    auto flagged = run_cli(base + " --iterations 1 --out " + (td.path() / "g.png").string(), td.path());
    REQUIRE(flagged.status == 0);
    auto mg = nlohmann::json::parse(slurp(td.path() / "g.png.json"));
    CHECK(mg["iterations"] == 1);
}

TEST_CASE("decode runs a saved generator over a photo") {
    testutil::TempDir td("cli");
    const fs::path ckpt = td.path() / "g.ckpt";
    GeneratorT<float>(GeneratorConfig{}, 11).save(ckpt);
    write_png(td.path() / "photo.png", 16, 16, 5);
    const fs::path out = td.path() / "styled.png";

    auto r = run_cli("decode --input " + (td.path() / "photo.png").string() + " --generator " +
                         ckpt.string() + " --out " + out.string(),
                     td.path());
    REQUIRE(r.status == 0);
    const Image img = load_image(out);
    CHECK(img.height() == 16);
    CHECK(img.width() == 16);
    REQUIRE(fs::exists(td.path() / "styled.png.json"));

    // The same invocation is bitwise repeatable.
    auto r2 = run_cli("decode --input " + (td.path() / "photo.png").string() + " --generator " +
                          ckpt.string() + " --out " + (td.path() / "styled2.png").string(),
                      td.path());
    REQUIRE(r2.status == 0);
    CHECK(testutil::bitwise_equal(out, td.path() / "styled2.png"));
}

TEST_CASE("decode synthesizes from pure noise when no input is given") {
    testutil::TempDir td("cli");
    const fs::path ckpt = td.path() / "g.ckpt";
    GeneratorT<float>(GeneratorConfig{}, 12).save(ckpt);

    auto r = run_cli("decode --generator " + ckpt.string() + " --noise brown --height 32" +
                         " --width 32 --out " + (td.path() / "noise.png").string(),
                     td.path());
    REQUIRE(r.status == 0);
    const Image img = load_image(td.path() / "noise.png");
    CHECK(img.height() == 32);
    CHECK(img.width() == 32);

    auto bad = run_cli("decode --generator " + ckpt.string() + " --out " +
                           (td.path() / "never.png").string(),
                       td.path());
    CHECK(bad.status != 0);
    CHECK(bad.err.find("bad-argument") != std::string::npos);
    CHECK(!fs::exists(td.path() / "never.png"));
}

TEST_CASE("decode rejects an out-of-range noise blend") {
    testutil::TempDir td("cli");
    const fs::path ckpt = td.path() / "g.ckpt";
    GeneratorT<float>(GeneratorConfig{}, 13).save(ckpt);
    write_png(td.path() / "photo.png", 16, 16, 6);

    auto r = run_cli("decode --input " + (td.path() / "photo.png").string() + " --generator " +
                         ckpt.string() + " --noise perlin --noise-blend 1.5 --out " +
                         (td.path() / "x.png").string(),
                     td.path());
    CHECK(r.status != 0);
    CHECK(r.err.find("bad-argument") != std::string::npos);
}

TEST_CASE("decode-video stylizes every frame and skips junk") {
    testutil::TempDir td("cli");
    const fs::path frames = td.path() / "frames";
    fs::create_directories(frames);
    write_png(frames / "f0.png", 16, 16, 7);
    write_png(frames / "f1.png", 16, 16, 8);
    write_png(frames / "f2.png", 16, 16, 9);
    {
        std::ofstream junk(frames / "notes.txt");
        junk << "not a frame\n";
    }
    const fs::path ckpt = td.path() / "g.ckpt";
    GeneratorT<float>(GeneratorConfig{}, 14).save(ckpt);
    const fs::path outdir = td.path() / "styled";

    auto r = run_cli("decode-video --frames " + frames.string() + " --generator " + ckpt.string() +
                         " --out " + outdir.string(),
                     td.path());
    REQUIRE(r.status == 0);
    CHECK(r.err.find("skipping") != std::string::npos);
    CHECK(fs::exists(outdir / "f0.png"));
    CHECK(fs::exists(outdir / "f1.png"));
    CHECK(fs::exists(outdir / "f2.png"));
    const auto manifest = nlohmann::json::parse(slurp(outdir / "config.json"));
    CHECK(manifest["count"] == 3);

    auto empty = run_cli("decode-video --frames " + (td.path() / "nowhere").string() +
                             " --generator " + ckpt.string(),
                         td.path());
    CHECK(empty.status != 0);
}

TEST_CASE("train-mgan consumes a saved corpus and writes its artifacts") {
    testutil::TempDir td("cli");
    std::vector<StylePair> pairs;
    for (int i = 0; i < 8; ++i)
        pairs.push_back({testutil::random_image<float>(16, 16, 700 + 2 * i),
                         testutil::random_image<float>(16, 16, 701 + 2 * i)});
    CorpusSpec spec;
    spec.seed = 3;
    const fs::path corpus = td.path() / "corpus";
    save_corpus(pairs, corpus, spec);

    const fs::path ckpt = td.path() / "g.ckpt";
    auto r = run_cli("train-mgan --corpus " + corpus.string() + " --epochs 1 --batch 4" +
                         " --patch-k 2 --patch-stride 2 --out " + ckpt.string() + " --save-d " +
                         (td.path() / "d.ckpt").string(),
                     td.path());
    REQUIRE(r.status == 0);
    REQUIRE(fs::exists(ckpt));
    REQUIRE(fs::exists(td.path() / "d.ckpt"));

    const auto run = nlohmann::json::parse(slurp(td.path() / "g.ckpt.run.json"));
    CHECK(run["g_updates"] == 2);  // 8 pairs / batch 4, one epoch
    CHECK(run["d_updates"] == 2);

    std::istringstream csv(slurp(td.path() / "g.ckpt.losses.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "batch,g_loss,d_loss");
    int rows = 0;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);

    // The checkpoint is a valid generator the decode verb accepts.
    write_png(td.path() / "photo.png", 16, 16, 10);
    auto dec = run_cli("decode --input " + (td.path() / "photo.png").string() + " --generator " +
                           ckpt.string() + " --out " + (td.path() / "styled.png").string(),
                       td.path());
    CHECK(dec.status == 0);

    auto bogus = run_cli("train-mgan --corpus " + corpus.string() + " --baseline bogus --out " +
                             (td.path() / "never.ckpt").string(),
                         td.path());
    CHECK(bogus.status != 0);
    CHECK(bogus.err.find("bad-argument") != std::string::npos);
}

TEST_CASE("train-mgan trains the pixel baseline when asked") {
    testutil::TempDir td("cli");
    std::vector<StylePair> pairs;
    for (int i = 0; i < 4; ++i)
        pairs.push_back({testutil::random_image<float>(16, 16, 800 + 2 * i),
                         testutil::random_image<float>(16, 16, 801 + 2 * i)});
    CorpusSpec spec;
    const fs::path corpus = td.path() / "corpus";
    save_corpus(pairs, corpus, spec);

    const fs::path ckpt = td.path() / "vae.ckpt";
    auto r = run_cli("train-mgan --corpus " + corpus.string() + " --epochs 1 --batch 4" +
                         " --baseline pixel --pretrain-steps 2 --out " + ckpt.string(),
                     td.path());
    REQUIRE(r.status == 0);
    REQUIRE(fs::exists(ckpt));
    CHECK(r.out.find("pretrain mse") != std::string::npos);
    const auto run = nlohmann::json::parse(slurp(td.path() / "vae.ckpt.run.json"));
    CHECK(run["baseline"] == "pixel");
    CHECK(run["d_updates"] == 0);
}

TEST_CASE("benchmark writes the timing table") {
    testutil::TempDir td("cli");
    const fs::path csv = td.path() / "bench.csv";
    auto r = run_cli("benchmark --sizes 16 --sizes 32 --trials 5 --out " + csv.string(), td.path());
    REQUIRE(r.status == 0);

    std::istringstream f(slurp(csv));
    std::string line;
    std::getline(f, line);
    REQUIRE(line == "resolution,trials,median_ms,device");
    std::getline(f, line);
    CHECK(line.rfind("256,5,", 0) == 0);  // 16x16 pixels
    CHECK(line.find("cpu") != std::string::npos);
    std::getline(f, line);
    CHECK(line.rfind("1024,5,", 0) == 0);  // 32x32 pixels

    const auto meta = nlohmann::json::parse(slurp(td.path() / "bench.csv.json"));
    CHECK(meta.contains("exponent"));
    CHECK(meta.contains("reference_gpu_anchors_ms"));
    CHECK(r.out.find("scaling exponent") != std::string::npos);

    auto few = run_cli("benchmark --sizes 16 --trials 2 --out " + (td.path() / "x.csv").string(),
                       td.path());
    CHECK(few.status != 0);
    CHECK(few.err.find("bad-argument") != std::string::npos);
}

TEST_CASE("visualize-features tiles the requested channels") {
    testutil::TempDir td("cli");
    const fs::path ckpt = td.path() / "g.ckpt";
    GeneratorT<float>(GeneratorConfig{}, 15).save(ckpt);
    const fs::path out = td.path() / "features.png";

    auto r = run_cli("visualize-features --generator " + ckpt.string() +
                         " --channels 0 --channels 7 --grid 2 --out " + out.string(),
                     td.path());
    REQUIRE(r.status == 0);
    const Image img = load_image(out);
    CHECK(img.height() == 16);       // grid 2 -> 16px tiles
    CHECK(img.width() == 16 + 2 + 16);  // two tiles and a 2px gap
    REQUIRE(fs::exists(td.path() / "features.png.json"));
}

TEST_CASE("info reports parameter accounting as json") {
    testutil::TempDir td("cli");
    auto r = run_cli("info --out " + (td.path() / "report.json").string(), td.path());
    REQUIRE(r.status == 0);
    const auto report = nlohmann::json::parse(r.out);
    CHECK(report.contains("total_mb"));
    CHECK(report["generator_bytes"].get<long>() > 0);
    const auto file_copy = nlohmann::json::parse(slurp(td.path() / "report.json"));
    CHECK(file_copy["total_bytes"] == report["total_bytes"]);
}
