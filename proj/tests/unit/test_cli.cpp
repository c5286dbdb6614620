#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "dncm/datakit.hpp"
#include "dncm/trainer.hpp"
#include "support.hpp"

using dncm::cli::kExitOk;
using dncm::cli::kExitRuntime;
using dncm::cli::kExitUsage;
using testsupport::read_file;
using testsupport::TempDir;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = dncm::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string p(const TempDir& d, const std::string& name) { return (d / name).string(); }

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"--help"}).code == kExitOk);
    CHECK(run({"train", "--help"}).code == kExitOk);
    TempDir d("cli_usage");
    CHECK(run({"gen-data", "--per-class", "0", "--out", p(d, "a.csv")}).code == kExitUsage);
    const auto missing = run({"eval", "--model", p(d, "nope"), "--data", p(d, "a.csv")});
    CHECK(missing.code == kExitUsage);
    const auto sweep = run({"bench", "--sweep", "epochs", "--values", "1"});
    CHECK(sweep.code == kExitUsage);
    CHECK(sweep.err.find("new-classes") != std::string::npos);
    CHECK(sweep.err.find("initial-classes") != std::string::npos);
}

TEST_CASE("help documents the training defaults") {
    const auto h = run({"train", "--help"});
    CHECK(h.out.find("--batch-size") != std::string::npos);
    CHECK(h.out.find("[16]") != std::string::npos);
    CHECK(h.out.find("[0.9]") != std::string::npos);
    CHECK(h.out.find("[0.001]") != std::string::npos);
    CHECK(h.out.find("[50]") != std::string::npos);
}

TEST_CASE("gen-data writes deterministic files") {
    TempDir d("cli_gen");
    const auto a = run({"gen-data", "--classes", "10", "--per-class", "500", "--seed", "5", "--out", p(d, "a.csv")});
    REQUIRE(a.code == kExitOk);
    CHECK(a.out.find("5000") != std::string::npos);
    const auto ds = dncm::data::load_csv(d / "a.csv");
    CHECK(ds.size() == 5000);
    CHECK(dncm::data::distinct_labels(ds).size() == 10);

    REQUIRE(run({"gen-data", "--classes", "10", "--per-class", "500", "--seed", "5", "--out", p(d, "b.csv")}).code == kExitOk);
    CHECK(read_file(d / "a.csv") == read_file(d / "b.csv"));

    REQUIRE(run({"gen-data", "--classes", "2", "--per-class", "5", "--new-classes", "3", "--seed", "5", "--out",
                 p(d, "i.csv"), "--incremental-out", p(d, "n.csv")})
                .code == kExitOk);
    CHECK(dncm::data::distinct_labels(dncm::data::load_csv(d / "i.csv")) == std::vector<dncm::Label>{0, 1});
    CHECK(dncm::data::distinct_labels(dncm::data::load_csv(d / "n.csv")) == std::vector<dncm::Label>{2, 3, 4});
    CHECK(run({"gen-data", "--new-classes", "3", "--out", p(d, "x.csv")}).code == kExitUsage);
}

TEST_CASE("gen-data reports unwritable paths") {
    TempDir d("cli_io");
    {
        std::ofstream blocker(d / "file");
        blocker << "x";
    }
    CHECK(run({"gen-data", "--classes", "1", "--per-class", "3", "--out", p(d, "file/a.csv")}).code == kExitRuntime);
}

TEST_CASE("train, update, eval and project") {
    TempDir d("cli_flow");
    REQUIRE(run({"gen-data", "--classes", "3", "--per-class", "40", "--new-classes", "1", "--seed",
                 "2", "--out", p(d, "init.csv"), "--incremental-out", p(d, "inc.csv")})
                .code == kExitOk);

    const std::vector<std::string> train_args{"train", "--data", p(d, "init.csv"), "--max-epoch", "3", "--seed", "4",
                                              "--hidden", "16,8"};
    auto a = train_args;
    a.insert(a.end(), {"--model", p(d, "m1")});
    const auto t = run(a);
    REQUIRE(t.code == kExitOk);
    auto b = train_args;
    b.insert(b.end(), {"--model", p(d, "m2")});
    REQUIRE(run(b).code == kExitOk);
    for (const char* f : {"extractor.txt", "registry.txt", "standardization.txt", "metadata.json", "train_report.csv"})
        CHECK(read_file(d / "m1" / f) == read_file(d / "m2" / f));

    // Updating with an empty CSV leaves every file unchanged.
    {
        std::ofstream empty(d / "empty.csv");
        empty << dncm::data::csv_header(10) << '\n';
    }
    REQUIRE(run({"update", "--model", p(d, "m1"), "--data", p(d, "empty.csv")}).code == kExitOk);
    for (const char* f : {"extractor.txt", "registry.txt", "standardization.txt", "metadata.json"})
        CHECK(read_file(d / "m1" / f) == read_file(d / "m2" / f));

    // One new class with 20 rows.
    auto inc = dncm::data::load_csv(d / "inc.csv");
    inc.resize(20);
    dncm::data::save_csv(inc, d / "twenty.csv");
    const auto u = run({"update", "--model", p(d, "m1"), "--data", p(d, "twenty.csv"), "--out", p(d, "m3")});
    REQUIRE(u.code == kExitOk);
    CHECK(u.out.find("1 new class") != std::string::npos);
    const auto updated = dncm::train::load_model(d / "m3");
    CHECK(updated.registry.size() == 4);
    CHECK(updated.registry.at(3).count == 20);
    CHECK(read_file(d / "m3" / "extractor.txt") == read_file(d / "m1" / "extractor.txt"));

    const auto e1 = run({"eval", "--model", p(d, "m1"), "--data", p(d, "init.csv")});
    const auto e2 = run({"eval", "--model", p(d, "m1"), "--data", p(d, "init.csv")});
    REQUIRE(e1.code == kExitOk);
    CHECK(e1.out == e2.out);
    CHECK(e1.out.find("accuracy") != std::string::npos);

    REQUIRE(run({"eval", "--model", p(d, "m1"), "--data", p(d, "init.csv"), "--per-class", "--out", p(d, "t.csv")}).code ==
            kExitOk);
    const auto table = read_file(d / "t.csv");
    CHECK(table.rfind("label,DNCM\n", 0) == 0);
    CHECK(table.find("\naverage,") != std::string::npos);

    CHECK(run({"eval", "--model", p(d, "m1"), "--data", p(d, "inc.csv")}).code != kExitOk);

    REQUIRE(run({"project", "--data", p(d, "init.csv"), "--space", "raw", "--out", p(d, "raw.csv")}).code == kExitOk);
    REQUIRE(run({"project", "--data", p(d, "init.csv"), "--space", "feature", "--model", p(d, "m1"), "--out",
                 p(d, "feat.csv")})
                .code == kExitOk);
    for (const char* f : {"raw.csv", "feat.csv"}) {
        const auto text = read_file(d / f);
        CHECK(text.rfind("# explained_variance: ", 0) == 0);
        CHECK(text.find("\nlabel,pc1,pc2\n") != std::string::npos);
    }
    CHECK(read_file(d / "raw.csv") != read_file(d / "feat.csv"));
    CHECK(run({"project", "--data", p(d, "init.csv"), "--space", "feature", "--out", p(d, "f2.csv")}).code == kExitUsage);
}

TEST_CASE("train metadata echoes the defaults") {
    TempDir d("cli_meta");
    REQUIRE(run({"gen-data", "--classes", "2", "--per-class", "20", "--out", p(d, "a.csv")}).code == kExitOk);
    REQUIRE(run({"train", "--data", p(d, "a.csv"), "--model", p(d, "m"), "--max-epoch", "0"}).code == kExitOk);
    const auto meta = nlohmann::json::parse(read_file(d / "m" / "metadata.json"));
    CHECK(meta["config"]["batch_size"] == 16);
    CHECK(meta["config"]["momentum"] == 0.9);
    CHECK(meta["config"]["learning_rate"] == 0.001);
    CHECK(meta["config"]["max_epoch"] == 0);
    CHECK(meta["config"]["lr_decay_factor"] == 0.5);
    CHECK(meta["config"]["lr_decay_every_epochs"] == 15);
    CHECK(meta["metric"] == "euclidean");

    REQUIRE(run({"train", "--data", p(d, "a.csv"), "--model", p(d, "m2")}).code == kExitOk);
    CHECK(nlohmann::json::parse(read_file(d / "m2" / "metadata.json"))["config"]["max_epoch"] == 50);

    CHECK(run({"train", "--data", p(d, "a.csv"), "--model", p(d, "m3"), "--momentum", "1.5"}).code == kExitUsage);
}

TEST_CASE("bench writes one row per method and value") {
    TempDir d("cli_bench");
    const auto r = run({"bench", "--sweep", "new-classes", "--values", "1,2", "--trials", "2", "--classes", "3",
                        "--new-classes", "2", "--per-class", "40", "--max-epoch", "2", "--hidden", "8",
                        "--train-samples-per-new-class", "5", "--no-latency", "--table", "--out-dir", p(d, "r")});
    REQUIRE(r.code == kExitOk);
    std::istringstream csv(read_file(d / "r" / "sweep_new-classes.csv"));
    std::string line;
    std::size_t rows = 0;
    std::getline(csv, line);
    while (std::getline(csv, line))
        if (line.find(",accuracy_mean,") != std::string::npos) ++rows;
    CHECK(rows == 3 * 2);
    const auto meta = nlohmann::json::parse(read_file(d / "r" / "sweep_new-classes.meta.json"));
    CHECK(meta["spec"]["trials"] == 2);
    CHECK(read_file(d / "r" / "sweep_new-classes.classes.csv").rfind("label,DNCM,KNN,RawNCM\n", 0) == 0);
}
