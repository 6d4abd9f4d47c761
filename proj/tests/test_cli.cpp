#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

// Spawns the real binary (path injected by the build) and inspects exit
// codes, streams, and the artifacts left on disk.

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path work_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("pclab_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path base =
        fs::temp_directory_path() / ("pclab_cli_io_" + std::to_string(counter++));
    const fs::path out_file = base.string() + ".out";
    const fs::path err_file = base.string() + ".err";
    const std::string cmd = std::string(PCLAB_BIN) + " " + args + " >" +
                            out_file.string() + " 2>" + err_file.string();
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    fs::remove(out_file);
    fs::remove(err_file);
    return r;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << j.dump(2) << '\n';
}

}  // namespace

TEST_CASE("help and argument errors") {
    CHECK(run_cli("--help").code == 0);
    CHECK(run_cli("--version").out.find("1.0.0") != std::string::npos);
    CHECK(run_cli("").code != 0);
    CHECK(run_cli("paint").code != 0);
    CHECK(run_cli("gen --threads 0").code != 0);
    CHECK(run_cli("train").code != 0);  // missing out and data
}

TEST_CASE("full pipeline through the binary") {
    const fs::path dir = work_dir("pipeline");
    const fs::path data = dir / "data";
    const fs::path cfg_path = dir / "gen.json";
    write_json(cfg_path, {{"family", "poisson2d"},
                          {"m", 6},
                          {"n_train", 3},
                          {"n_val", 1},
                          {"n_test", 2},
                          {"out", (dir / "ignored").string()},
                          {"seed", 1}});

    // Flags beat the config file.
    auto gen = run_cli("gen --config " + cfg_path.string() + " --seed 7 --out " +
                       data.string());
    CAPTURE(gen.err);
    REQUIRE(gen.code == 0);
    const auto summary = nlohmann::json::parse(gen.out);
    CHECK(summary["command"] == "gen");
    CHECK(summary["config"]["seed"] == 7);
    CHECK(summary["config"]["out"] == data.string());
    REQUIRE(fs::exists(data / "manifest.json"));
    CHECK(fs::exists(data / "train_002.mtx"));

    // Same seed, fresh directory, identical matrix bytes.
    const fs::path data2 = dir / "data2";
    REQUIRE(run_cli("gen --config " + cfg_path.string() + " --seed 7 --out " +
                    data2.string())
                .code == 0);
    CHECK(slurp(data / "test_000.mtx") == slurp(data2 / "test_000.mtx"));

    const fs::path tr = dir / "train";
    write_json(dir / "train.json", {{"data", data.string()},
                                    {"epochs", 2},
                                    {"batch_size", 2},
                                    {"out", tr.string()}});
    auto train = run_cli("train --config " + (dir / "train.json").string() +
                         " --mode gnnic --seed 3");
    CAPTURE(train.err);
    REQUIRE(train.code == 0);
    const auto tsum = nlohmann::json::parse(train.out);
    CHECK(tsum["config"]["mode"] == "gnnic");
    REQUIRE(fs::exists(tr / "checkpoint.json"));
    CHECK(fs::exists(tr / "log.jsonl"));
    CHECK(fs::exists(tr / "state.json"));

    write_json(dir / "eval.json",
               {{"data", data.string()},
                {"out", (dir / "eval").string()},
                {"gnnic_checkpoint", (tr / "checkpoint.json").string()}});
    auto eval = run_cli("eval --config " + (dir / "eval.json").string());
    CAPTURE(eval.err);
    REQUIRE(eval.code == 0);
    CHECK(fs::exists(dir / "eval" / "eval.csv"));
    CHECK(fs::exists(dir / "eval" / "eval_means.csv"));
    CHECK(slurp(dir / "eval" / "eval.csv").find("gnnic") != std::string::npos);

    write_json(dir / "cross.json",
               {{"sizes", {4, 6}},
                {"samples_per_size", 1},
                {"out", (dir / "cross").string()},
                {"gnnic_checkpoint", (tr / "checkpoint.json").string()}});
    auto cross =
        run_cli("crossscale --config " + (dir / "cross.json").string() + " --seed 2");
    CAPTURE(cross.err);
    REQUIRE(cross.code == 0);
    CHECK(fs::exists(dir / "cross" / "crossscale.csv"));

    write_json(dir / "drop.json", {{"m", 6}, {"out", (dir / "drop").string()}});
    auto drop = run_cli("dropout --config " + (dir / "drop.json").string());
    CAPTURE(drop.err);
    REQUIRE(drop.code == 0);
    CHECK(fs::exists(dir / "drop" / "dropout.csv"));

    write_json(dir / "an.json",
               {{"m", 6},
                {"out", (dir / "an").string()},
                {"gnnic_checkpoint", (tr / "checkpoint.json").string()}});
    auto an = run_cli("analyze --config " + (dir / "an.json").string());
    CAPTURE(an.err);
    REQUIRE(an.code == 0);
    CHECK(fs::exists(dir / "an" / "analyze.json"));
    CHECK(fs::exists(dir / "an" / "errors_gnnic.csv"));
}

TEST_CASE("config failures speak up") {
    const fs::path dir = work_dir("badcfg");
    write_json(dir / "typo.json",
               {{"out", (dir / "x").string()}, {"m", 6}, {"typoo", 1}});
    auto typo = run_cli("gen --config " + (dir / "typo.json").string());
    CHECK(typo.code != 0);
    CHECK(typo.err.find("typoo") != std::string::npos);

    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK(run_cli("gen --config " + (dir / "broken.json").string()).code != 0);
    CHECK(run_cli("gen --config " + (dir / "missing.json").string()).code != 0);

    // The threads flag is accepted everywhere but only 1 is silent.
    write_json(dir / "gen.json", {{"m", 4}, {"n_train", 1}, {"n_val", 1},
                                  {"n_test", 1}, {"out", (dir / "g").string()}});
    auto noisy = run_cli("gen --config " + (dir / "gen.json").string() +
                         " --threads 2");
    CHECK(noisy.code == 0);
    CHECK(noisy.err.find("single threaded") != std::string::npos);
}
