#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "fgmhd/image.hpp"
#include "fgmhd/ioutil.hpp"
#include "fgmhd/synth.hpp"

using namespace fgmhd;
namespace fs = std::filesystem;

namespace {

const std::string kCli = FGMHD_CLI_PATH;

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run(const std::string& args) {
    const fs::path out = fs::temp_directory_path() / "fgmhd_cli_out.txt";
    const std::string cmd = kCli + " " + args + " >" + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.output = read_text_file(out.string());
    return r;
}

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "fgmhd_cli_work";
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("estimate on a filled square reports dimension 2") {
    const fs::path dir = work_dir();
    const fs::path img = dir / "filled.pgm";
    save_pgm(ImageGrid(256, 256, 1.0), img.string());

    const RunResult r = run("estimate " + img.string() + " --method box");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find(img.string() + ",box,2.000000,1.000000") != std::string::npos);
}

TEST_CASE("unknown method exits 2 without writing csv") {
    const fs::path dir = work_dir();
    const fs::path manifest = dir / "none" / "manifest.json";
    const fs::path csv = dir / "should_not_exist.csv";
    fs::remove(csv);

    SynthSpec spec;
    spec.counts = {2, 0, 0};
    spec.image_size = 64;
    synth_dataset(spec, (dir / "mini").string(), 1);

    const RunResult r = run("bench --manifest " + (dir / "mini" / "manifest.json").string() +
                            " --methods box,telepathy --out " + csv.string());
    CHECK(r.exit_code == 2);
    CHECK(!fs::exists(csv));
    (void)manifest;
}

TEST_CASE("synth then estimate round trip") {
    const fs::path dir = work_dir() / "roundtrip";
    fs::remove_all(dir);
    RunResult r = run("synth --out-dir " + dir.string() +
                      " --canonical 3 --ifs 2 --cascade 1 --size 64 --chaos-points 20000");
    CHECK(r.exit_code == 0);
    r = run("estimate --manifest " + (dir / "manifest.json").string() + " --method box");
    CHECK(r.exit_code == 0);
    fs::remove_all(dir);
}

TEST_CASE("missing manifest exits 3") {
    const RunResult r = run("bench --manifest /nonexistent/manifest.json --out /tmp/x.csv");
    CHECK(r.exit_code == 3);
}

TEST_CASE("identical flag vectors give byte-identical csv output") {
    const fs::path dir = work_dir() / "determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);

    RunResult r = run("synth --out-dir " + (dir / "data").string() +
                      " --canonical 4 --ifs 2 --cascade 2 --size 64 --chaos-points 20000");
    REQUIRE(r.exit_code == 0);
    const std::string manifest = (dir / "data" / "manifest.json").string();

    const std::string bench_args = "bench --manifest " + manifest +
                                   " --methods box,sandbox --no-timing --seed 7 --out ";
    REQUIRE(run(bench_args + (dir / "b1.csv").string()).exit_code == 0);
    REQUIRE(run(bench_args + (dir / "b2.csv").string()).exit_code == 0);
    CHECK(read_text_file((dir / "b1.csv").string()) == read_text_file((dir / "b2.csv").string()));

    const std::string toy_args =
        "train-toy --epochs 8 --refs 4 --hd-samples 4 --seed 11 --out-dir ";
    REQUIRE(run(toy_args + (dir / "t1").string()).exit_code == 0);
    REQUIRE(run(toy_args + (dir / "t2").string()).exit_code == 0);
    CHECK(read_text_file((dir / "t1" / "trace.csv").string()) ==
          read_text_file((dir / "t2" / "trace.csv").string()));
    CHECK(read_text_file((dir / "t1" / "params.json").string()) ==
          read_text_file((dir / "t2" / "params.json").string()));
    fs::remove_all(dir);
}

TEST_CASE("sample emits only rows clearing the threshold") {
    const fs::path dir = work_dir() / "sample";
    fs::remove_all(dir);
    fs::create_directories(dir);

    RunResult r = run("train-toy --epochs 30 --refs 4 --hd-samples 8 --schedule none --out-dir " +
                      (dir / "toy").string());
    REQUIRE(r.exit_code == 0);

    const std::string csv = (dir / "kept.csv").string();
    r = run("sample --params " + (dir / "toy" / "params.json").string() +
            " --tau 1.55 --batch 16 --out " + csv);
    CHECK(r.exit_code == 0);

    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "slot,retries,dimension");
    while (std::getline(in, line)) {
        const auto last_comma = line.rfind(',');
        REQUIRE(last_comma != std::string::npos);
        CHECK(std::stod(line.substr(last_comma + 1)) >= 1.55);
    }
    fs::remove_all(dir);
}
