#include <catch2/catch.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "trajpred/checkpoint.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(TRAJPRED_CLI) + " " + args + " 2>&1";
    std::array<char, 4096> buffer{};
    std::string output;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buffer.data(), buffer.size(), pipe)) output += buffer.data();
    const int status = pclose(pipe);
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.output = output;
    return r;
}

std::string fixture(const std::string& name) {
    return std::string(TRAJPRED_FIXTURES) + "/" + name;
}

std::vector<unsigned char> file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    return std::vector<unsigned char>((std::istreambuf_iterator<char>(is)),
                                      std::istreambuf_iterator<char>());
}

std::string temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

} // namespace

TEST_CASE("prepare builds a cache with the hand-verified scene count") {
    const std::string out = temp_dir("trajpred_cli_prepare");
    auto r = run_cli("prepare --dataset-root " + fixture("dataset_root") + " --out " + out);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("synth1: 2 trajectories, 12 scenes") != std::string::npos);
    CHECK(r.output.find("synth2: 1 trajectories, 1 scenes") != std::string::npos);
    CHECK(r.output.find("total: 13 scenes") != std::string::npos);
    CHECK(fs::exists(out + "/scenes.cache"));

    SECTION("re-running on unchanged inputs is byte-identical") {
        auto first = file_bytes(out + "/scenes.cache");
        auto r2 = run_cli("prepare --dataset-root " + fixture("dataset_root") + " --out " + out);
        CHECK(r2.exit_code == 0);
        CHECK(file_bytes(out + "/scenes.cache") == first);
    }
    fs::remove_all(out);
}

TEST_CASE("prepare fails on an empty dataset root") {
    const std::string empty = temp_dir("trajpred_cli_empty_root");
    const std::string out = temp_dir("trajpred_cli_empty_out");
    auto r = run_cli("prepare --dataset-root " + empty + " --out " + out);
    CHECK(r.exit_code != 0);
    CHECK(r.output.find("error") != std::string::npos);
    fs::remove_all(empty);
    fs::remove_all(out);
}

TEST_CASE("prepare lists every missing annotation file") {
    const std::string root = temp_dir("trajpred_cli_missing_root");
    fs::create_directories(root + "/ds_a");
    fs::create_directories(root + "/ds_b");
    const std::string out = temp_dir("trajpred_cli_missing_out");
    auto r = run_cli("prepare --dataset-root " + root + " --out " + out);
    CHECK(r.exit_code != 0);
    CHECK(r.output.find("ds_a/annotations.txt") != std::string::npos);
    CHECK(r.output.find("ds_b/annotations.txt") != std::string::npos);
    fs::remove_all(root);
    fs::remove_all(out);
}

TEST_CASE("the cli pipeline runs train, eval, baseline and plot end to end") {
    const std::string work = temp_dir("trajpred_cli_pipeline");
    auto prep = run_cli("prepare --dataset-root " + fixture("dataset_root") + " --out " + work);
    REQUIRE(prep.exit_code == 0);
    const std::string cache = work + "/scenes.cache";

    SECTION("train with zero epochs writes the initialization checkpoint") {
        auto r = run_cli("train --cache " + cache + " --split synth2 --out " + work +
                         "/run0 --epochs 0 --seed 9");
        CHECK(r.exit_code == 0);
        CHECK(fs::exists(work + "/run0/checkpoint.ckpt"));
        auto records = trajpred::read_checkpoint_raw(work + "/run0/checkpoint.ckpt");
        CHECK(records.at("__meta.seed")[0] == 9.0);
    }

    SECTION("train then eval and plot on the held-out fold") {
        auto tr = run_cli("train --cache " + cache + " --split synth2 --out " + work +
                          "/run --epochs 2 --seed 9");
        REQUIRE(tr.exit_code == 0);
        CHECK(tr.output.find("\"epoch\":0") != std::string::npos);
        CHECK(fs::exists(work + "/run/train_log.jsonl"));
        CHECK(fs::exists(work + "/run/train_report.json"));

        auto ev = run_cli("eval --cache " + cache + " --split synth2 --checkpoint " + work +
                          "/run/checkpoint.ckpt --out " + work + "/run");
        CHECK(ev.exit_code == 0);
        CHECK(ev.output.find("synth2") != std::string::npos);
        CHECK(fs::exists(work + "/run/eval_metrics.json"));
        CHECK(fs::exists(work + "/run/eval_scenes.jsonl"));

        auto pl = run_cli("plot --cache " + cache + " --split synth2 --checkpoint " + work +
                          "/run/checkpoint.ckpt --out " + work + "/plots --max-scenes 1");
        CHECK(pl.exit_code == 0);
        CHECK(fs::exists(work + "/plots/scene_0.png"));
        CHECK(fs::exists(work + "/plots/fde_histogram.png"));
        CHECK(fs::exists(work + "/plots/final_error_cloud.png"));
        CHECK(fs::exists(work + "/plots/distribution.json"));
    }

    SECTION("a checkpoint cannot load into a mismatched model config") {
        auto tr = run_cli("train --cache " + cache + " --split synth2 --out " + work +
                          "/mismatch --epochs 0 --seed 1");
        REQUIRE(tr.exit_code == 0);
        auto ev = run_cli("eval --cache " + cache + " --split synth2 --checkpoint " + work +
                          "/mismatch/checkpoint.ckpt --out " + work +
                          "/mismatch --backbone patch");
        CHECK(ev.exit_code != 0);
        CHECK(ev.output.find("error") != std::string::npos);
    }

    SECTION("baseline scores zero on the straight-line fixture") {
        auto r = run_cli("baseline --cache " + cache + " --split synth2 --out " + work +
                         "/baseline");
        CHECK(r.exit_code == 0);
        CHECK(r.output.find("0.0000") != std::string::npos);
    }
    fs::remove_all(work);
}

TEST_CASE("gradcheck subcommand passes on the default config") {
    auto r = run_cli("gradcheck --probes 25 --seed 3");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("max_rel_err") != std::string::npos);
}

TEST_CASE("unknown split names fail with a diagnostic") {
    const std::string work = temp_dir("trajpred_cli_badsplit");
    auto prep = run_cli("prepare --dataset-root " + fixture("dataset_root") + " --out " + work);
    REQUIRE(prep.exit_code == 0);
    auto r = run_cli("baseline --cache " + work + "/scenes.cache --split nowhere --out " + work);
    CHECK(r.exit_code != 0);
    CHECK(r.output.find("nowhere") != std::string::npos);
    fs::remove_all(work);
}
